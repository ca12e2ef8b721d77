//! Seeded search fixtures and a brute-force scan that shares no code with the
//! library search.

use std::collections::BTreeMap;

use chrono::DateTime;
use gridwatch_core::{Location, PortalState, Resource, ResourceId, ResourceInfo};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HOSTS: &[&str] = &["n1", "cpu-node", "Storage", "gw", "login", "obs", "CPUFARM", "edge"];
const DOMAINS: &[&str] = &["example.org", "Grid.test", "unimelb.edu.au", "lab.local"];
const TYPES: &[&str] = &["unconfigured", "http-xml", "tcp-probe", "cluster", "storage"];
const WORDS: &[&str] = &[
    "cpu",
    "CPU",
    "queue",
    "free",
    "total",
    "64",
    "12",
    "idle",
    "busy",
    "R&D",
    "<tag>",
    "disk",
    "Cpus",
    "reading",
    "ok",
    "tape",
    "a b",
    "ünïcode",
];
const ELEMENTS: &[&str] = &["cluster", "cpus", "queue", "store", "state", "used-gb", "x"];

pub const FIXED_KEYWORDS: &[&str] = &[
    "cpu",
    "",
    "zzz-no-match",
    "CPU",
    "queue free",
    ".test",
    "r&d",
    "<tag>",
    "4 12",
    "ü",
];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub state: PortalState,
    pub infos: BTreeMap<ResourceId, ResourceInfo>,
    /// Text nodes of each parsable payload, in document order.
    pub texts: BTreeMap<ResourceId, Vec<String>>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Serializes a random tree, returning the XML and its text nodes.
fn random_payload(rng: &mut impl Rng, depth: usize, xml: &mut String, texts: &mut Vec<String>) {
    let name = *ELEMENTS.choose(rng).unwrap();
    xml.push('<');
    xml.push_str(name);
    if rng.random_bool(0.3) {
        xml.push_str(" attr=\"cpu-hidden\"");
    }
    xml.push('>');
    let mut last_was_text = false;
    for _ in 0..rng.random_range(0..4) {
        if depth > 0 && rng.random_bool(0.5) {
            random_payload(rng, depth - 1, xml, texts);
            last_was_text = false;
        } else {
            let word = if rng.random_bool(0.2) {
                "\n  ".to_string()
            } else {
                WORDS.choose(rng).unwrap().to_string()
            };
            xml.push_str(&escape(&word));
            if last_was_text {
                texts.last_mut().unwrap().push_str(&word);
            } else {
                texts.push(word);
            }
            last_was_text = true;
        }
        if rng.random_bool(0.2) {
            xml.push_str("<!-- cpu comment -->");
        }
    }
    xml.push_str("</");
    xml.push_str(name);
    xml.push('>');
}

pub fn random_fixture(seed: u64, resources: usize) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = PortalState::default();
    let mut infos = BTreeMap::new();
    let mut texts = BTreeMap::new();
    for i in 0..resources {
        let id = ResourceId::from_u128(rng.random());
        let host = format!(
            "{}{}.{}",
            HOSTS.choose(&mut rng).unwrap(),
            i,
            DOMAINS.choose(&mut rng).unwrap()
        );
        let label = if rng.random_bool(0.5) {
            host.clone()
        } else {
            format!("{} {}", WORDS.choose(&mut rng).unwrap(), i)
        };
        state.resources.push(Resource {
            id: id.clone(),
            hostname: host,
            port: None,
            resource_type: TYPES.choose(&mut rng).unwrap().to_string(),
            label,
            endpoint: None,
            location: Location::default(),
            enabled: true,
        });
        let at = DateTime::from_timestamp(1_700_000_000 + i as i64, 0).unwrap();
        match rng.random_range(0..4) {
            0 => {}
            1 => {
                infos.insert(id.clone(), ResourceInfo::down(id.clone(), "connection refused", at, 3));
                texts.insert(id, Vec::new());
            }
            2 => {
                let mut xml = String::new();
                let mut t = Vec::new();
                random_payload(&mut rng, 3, &mut xml, &mut t);
                infos.insert(id.clone(), ResourceInfo::up(id.clone(), xml, at, 3));
                texts.insert(id, t);
            }
            _ => {
                let mut info = ResourceInfo::down(id.clone(), "invalid payload", at, 3);
                info.payload_xml = "<cpu>truncated".to_string();
                infos.insert(id.clone(), info);
                texts.insert(id, Vec::new());
            }
        }
    }
    Fixture { state, infos, texts }
}

/// Twenty keywords: the fixed list plus substrings of random resources.
pub fn keywords(seed: u64, fixture: &Fixture) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let mut out: Vec<String> = FIXED_KEYWORDS.iter().map(|s| s.to_string()).collect();
    while out.len() < 20 {
        let r = fixture.state.resources.choose(&mut rng).unwrap();
        let mut source: Vec<char> = match rng.random_range(0..3) {
            0 => r.hostname.chars().collect(),
            1 => r.label.chars().collect(),
            _ => fixture
                .texts
                .get(&r.id)
                .map(|t| t.join(" "))
                .unwrap_or_default()
                .chars()
                .collect(),
        };
        if source.is_empty() {
            continue;
        }
        let start = rng.random_range(0..source.len());
        let end = rng.random_range(start + 1..=source.len().min(start + 6));
        source.truncate(end);
        let word: String = source[start..].iter().collect();
        out.push(if rng.random_bool(0.5) { word.to_uppercase() } else { word });
    }
    out
}

/// Linear scan over every field, lowercasing each haystack on the fly.
pub fn brute_force(keyword: &str, fixture: &Fixture) -> Vec<ResourceId> {
    let needle: String = keyword.chars().flat_map(char::to_lowercase).collect();
    let mut hits = Vec::new();
    for r in &fixture.state.resources {
        let payload = fixture.texts.get(&r.id).map(|t| t.join(" ")).unwrap_or_default();
        let haystacks = [
            r.hostname.as_str(),
            r.label.as_str(),
            r.resource_type.as_str(),
            payload.as_str(),
        ];
        let found = haystacks.iter().any(|h| {
            let lower: String = h.chars().flat_map(char::to_lowercase).collect();
            lower.contains(&needle)
        });
        if found {
            hits.push(r.id.clone());
        }
    }
    hits
}
