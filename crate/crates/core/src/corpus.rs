//! Synthetic document corpus: three intertwined plots plus background news.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{count_words, DocumentId, DocumentRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SubplotShape {
    pub name: String,
    pub id_prefix: String,
    pub key_documents: usize,
    pub background_documents: usize,
    pub total_words: usize,
}

/// The default shape: three plots of eight documents each.
pub fn default_shape() -> Vec<SubplotShape> {
    [("drug trafficking", "dt", 1207), ("wildlife smuggling", "ws", 1229), ("bioterrorism", "bt", 1180)]
        .into_iter()
        .map(|(name, prefix, words)| SubplotShape {
            name: name.into(),
            id_prefix: prefix.into(),
            key_documents: 6,
            background_documents: 2,
            total_words: words,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DocumentRole {
    Key,
    Background,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DocumentRef {
    pub id: DocumentId,
    pub title: String,
    pub role: DocumentRole,
    pub word_count: usize,
    /// Body text, relative to the manifest.
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SubplotEntry {
    pub name: String,
    pub documents: Vec<DocumentRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CorpusManifest {
    pub seed: u64,
    pub subplots: Vec<SubplotEntry>,
    pub per_subplot_counts: BTreeMap<String, usize>,
    pub total_word_counts: BTreeMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub documents: Vec<DocumentRecord>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("manifest: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("inconsistent corpus: {0}")]
    Inconsistent(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

struct Vocabulary {
    people: &'static [&'static str],
    places: &'static [&'static str],
    orgs: &'static [&'static str],
    items: &'static [&'static str],
    sentences: &'static [&'static str],
    titles: &'static [&'static str],
}

const DRUGS: Vocabulary = Vocabulary {
    people: &["Carlos Mendez", "Rosa Quintero", "Viktor Salko", "Luis Ortega", "Dana Whitfield", "Omar Reyes"],
    places: &["Miami", "Cartagena", "Port Everglades", "Key Largo", "Barranquilla", "Nassau"],
    orgs: &["Caribe Freight", "Sol Imports", "Bayside Marine", "Atlas Courier"],
    items: &["cocaine", "sealed containers", "cash bundles", "fishing trawlers", "forged manifests"],
    sentences: &[
        "{person} met {person2} in {place} on {date}.",
        "According to customs records, {org} moved {item} through {place}.",
        "Police in {place} questioned {person} about the {item}.",
        "On {date}, {org} wired funds to an account held by {person}.",
        "{person} was seen at the {org} warehouse near {place}.",
        "An informant said {person2} arranged a shipment of {item} for {date}.",
        "Investigators linked {org} to a second company registered in {place}.",
        "The Coast Guard stopped a vessel chartered by {person} outside {place}.",
    ],
    titles: &["{org} Shipment Flagged", "Arrest Near {place}", "{person} Under Investigation", "Port Seizure in {place}"],
};

const WILDLIFE: Vocabulary = Vocabulary {
    people: &["Anika Brandt", "Tomas Varga", "Mei Lin Cho", "Felix Arroyo", "Greta Holm", "Samuel Okafor"],
    places: &["Cayman Brac", "Frankfurt", "Panama City", "Tampa", "Grand Cayman", "Rotterdam"],
    orgs: &["Exotica Pets", "Blue Lagoon Aquatics", "Verde Reptile Farm", "Northwind Cargo"],
    items: &["blue iguanas", "reptile skins", "rare orchids", "turtle eggs", "live parrots"],
    sentences: &[
        "{person} sold {item} to a dealer from {place} on {date}.",
        "Inspectors in {place} found {item} hidden in crates sent by {org}.",
        "{org} listed {item} as farm bred, but {person2} disputed that claim.",
        "On {date}, {person} flew from {place} carrying undeclared {item}.",
        "A collector in {place} paid {org} in cash for {item}.",
        "{person2} told reporters that {org} had no export permit.",
        "Wildlife officers visited the {org} site near {place} on {date}.",
        "Records show {person} shipped {item} twice through {place}.",
    ],
    titles: &["Smuggled {item} Seized", "{org} Permit Questioned", "Collector in {place} Charged", "{person} Detained"],
};

const BIO: Vocabulary = Vocabulary {
    people: &["Ivan Petrov", "Hannah Greer", "Rashid Karimi", "Paul Lindqvist", "Nora Castellanos", "Eli Marsh"],
    places: &["Boston", "Geneva", "Caracas", "Raleigh", "Lisbon", "Baltimore"],
    orgs: &["Helix Diagnostics", "Meridian Labs", "Crescent Agritech", "Pioneer Vaccines"],
    items: &["culture samples", "lab equipment", "aerosol sprayers", "growth media", "shipping coolers"],
    sentences: &[
        "{person} ordered {item} from {org} on {date}.",
        "A former employee of {org} in {place} reported missing {item}.",
        "{person2} rented a storage unit in {place} under a false name.",
        "On {date}, {person} met a researcher from {org} in {place}.",
        "Health officials in {place} reviewed purchases of {item}.",
        "{org} could not account for {item} listed on its inventory.",
        "Phone records tie {person} to {person2} since {date}.",
        "Agents searched a house in {place} rented by {person}.",
    ],
    titles: &["{org} Inventory Gap", "Lab Theft in {place}", "{person} Questioned", "Purchases of {item} Reviewed"],
};

const BACKGROUND: Vocabulary = Vocabulary {
    people: &["Mayor Ellis", "Judge Park", "Coach Romero", "Dr. Haynes"],
    places: &["Springfield", "Riverside", "Lakeview", "Fairmont"],
    orgs: &["City Council", "Harbor Authority", "County Library", "Chamber of Commerce"],
    items: &["road repairs", "a new budget", "park lighting", "school buses"],
    sentences: &[
        "The {org} approved {item} on {date}.",
        "{person} spoke about {item} at a meeting in {place}.",
        "Residents of {place} asked the {org} to delay {item}.",
        "On {date}, {person} opened a community fair in {place}.",
        "Local businesses in {place} welcomed {item}.",
    ],
    titles: &["{org} Meets", "News from {place}", "{person} Addresses Residents"],
};

const MONTHS: [&str; 12] = [
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October", "November",
    "December",
];

/// A date in one of the styles the time-label parser accepts.
fn random_date(rng: &mut ChaCha8Rng) -> String {
    let (year, month, day) = (rng.gen_range(2006..=2007), rng.gen_range(1..=12usize), rng.gen_range(1..=28u32));
    match rng.gen_range(0..4) {
        0 => format!("{year}-{month:02}-{day:02}"),
        1 => format!("{} {day}, {year}", MONTHS[month - 1]),
        2 => format!("{day} {} {year}", MONTHS[month - 1]),
        _ => format!("{month}/{day}/{year}"),
    }
}

fn fill(template: &str, vocab: &Vocabulary, rng: &mut ChaCha8Rng) -> String {
    let person = *vocab.people.choose(rng).expect("non-empty");
    let person2 = *vocab.people.iter().filter(|p| **p != person).collect::<Vec<_>>().choose(rng).expect("two people");
    let mut out = template.replace("{person2}", person2).replace("{person}", person);
    for (slot, list) in [("{place}", vocab.places), ("{org}", vocab.orgs), ("{item}", vocab.items)] {
        out = out.replace(slot, list.choose(rng).expect("non-empty"));
    }
    if out.contains("{date}") {
        out = out.replace("{date}", &random_date(rng));
    }
    out
}

/// Body with exactly `target` whitespace-separated words.
fn body(vocab: &Vocabulary, target: usize, rng: &mut ChaCha8Rng) -> String {
    let mut words: Vec<String> = Vec::with_capacity(target);
    while words.len() < target {
        let sentence = fill(vocab.sentences.choose(rng).expect("non-empty"), vocab, rng);
        let room = target - words.len();
        let mut tokens: Vec<String> = sentence.split_whitespace().map(str::to_owned).collect();
        if tokens.len() > room {
            tokens.truncate(room);
            if let Some(last) = tokens.last_mut() {
                if !last.ends_with('.') {
                    last.push('.');
                }
            }
        }
        words.extend(tokens);
    }
    let mut text = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            text.push(if words[i - 1].ends_with('.') && rng.gen_bool(0.15) { '\n' } else { ' ' });
        }
        text.push_str(w);
    }
    text
}

/// Splits `total` into `weights.len()` parts proportional to the weights.
fn split_total(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let mut parts: Vec<usize> = weights.iter().map(|w| (total as f64 * w / sum).floor() as usize).collect();
    let short = total - parts.iter().sum::<usize>();
    for p in parts.iter_mut().take(short) {
        *p += 1;
    }
    parts
}

pub fn generate_corpus(seed: u64, shape: &[SubplotShape]) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subplots = Vec::new();
    let mut documents = Vec::new();
    let plots = [&DRUGS, &WILDLIFE, &BIO];
    for (index, plot) in shape.iter().enumerate() {
        let vocab = plots[index % plots.len()];
        let roles: Vec<DocumentRole> = std::iter::repeat_n(DocumentRole::Key, plot.key_documents)
            .chain(std::iter::repeat_n(DocumentRole::Background, plot.background_documents))
            .collect();
        let weights: Vec<f64> = roles
            .iter()
            .map(|r| match r {
                DocumentRole::Key => rng.gen_range(1.0..1.6),
                DocumentRole::Background => rng.gen_range(0.5..0.8),
            })
            .collect();
        let targets = split_total(plot.total_words, &weights);
        let mut refs = Vec::new();
        for (i, (role, target)) in roles.iter().zip(targets).enumerate() {
            let v = if *role == DocumentRole::Key { vocab } else { &BACKGROUND };
            let id = DocumentId::from(format!("{}-{:02}", plot.id_prefix, i + 1));
            let title = fill(v.titles.choose(&mut rng).expect("non-empty"), v, &mut rng);
            let record = DocumentRecord::new(id.clone(), title.clone(), body(v, target, &mut rng), plot.name.clone());
            refs.push(DocumentRef {
                id: id.clone(),
                title,
                role: *role,
                word_count: record.word_count,
                file: format!("documents/{id}.txt"),
            });
            documents.push(record);
        }
        subplots.push(SubplotEntry { name: plot.name.clone(), documents: refs });
    }
    let manifest = CorpusManifest {
        seed,
        per_subplot_counts: subplots.iter().map(|s| (s.name.clone(), s.documents.len())).collect(),
        total_word_counts: subplots
            .iter()
            .map(|s| (s.name.clone(), s.documents.iter().map(|d| d.word_count).sum()))
            .collect(),
        subplots,
    };
    Corpus { manifest, documents }
}

impl Corpus {
    /// Writes `manifest.json` and one text file per document.
    pub fn write(&self, dir: &Path) -> Result<(), CorpusError> {
        let docs_dir = dir.join("documents");
        std::fs::create_dir_all(&docs_dir).map_err(io_err(&docs_dir))?;
        let value = serde_json::to_value(&self.manifest)?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&value)? + "\n").map_err(io_err(&path))?;
        let files: BTreeMap<&DocumentId, &str> =
            self.manifest.subplots.iter().flat_map(|s| &s.documents).map(|d| (&d.id, d.file.as_str())).collect();
        for doc in &self.documents {
            let path = dir.join(files[&doc.id]);
            std::fs::write(&path, &doc.body).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// Reads a corpus directory and checks it against its manifest.
    pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
        let path = dir.join("manifest.json");
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        let manifest: CorpusManifest = serde_json::from_str(&text)?;
        let mut seen = BTreeSet::new();
        let mut documents = Vec::new();
        for subplot in &manifest.subplots {
            let mut total = 0;
            for d in &subplot.documents {
                if !seen.insert(d.id.clone()) {
                    return Err(CorpusError::Inconsistent(format!("{} listed twice", d.id)));
                }
                let path = dir.join(&d.file);
                let body = std::fs::read_to_string(&path).map_err(io_err(&path))?;
                let record = DocumentRecord::new(d.id.clone(), d.title.clone(), body, subplot.name.clone());
                if record.word_count != d.word_count {
                    return Err(CorpusError::Inconsistent(format!(
                        "{}: {} words, manifest says {}",
                        d.id, record.word_count, d.word_count
                    )));
                }
                total += record.word_count;
                documents.push(record);
            }
            if manifest.total_word_counts.get(&subplot.name) != Some(&total) {
                return Err(CorpusError::Inconsistent(format!("{}: total is {total}", subplot.name)));
            }
            if manifest.per_subplot_counts.get(&subplot.name) != Some(&subplot.documents.len()) {
                return Err(CorpusError::Inconsistent(format!("{}: document count mismatch", subplot.name)));
            }
        }
        Ok(Corpus { manifest, documents })
    }

    pub fn subplot_word_total(&self, name: &str) -> usize {
        self.documents.iter().filter(|d| d.subplot == name).map(|d| count_words(&d.body)).sum()
    }
}
