//! Deterministic template corpus for open-set experiments.
//!
//! Each relation is realized by sentences that contain two of its trigger
//! words, the head and tail entity mentions, and filler words shared by every
//! relation. Relations are taken from a fixed pool in order: the first
//! `known` are known, the next `val_unknown` only appear in validation, and
//! the next `test_unknown` only appear in test. Several unknown relations
//! reuse one trigger word of a known relation, so their instances are not
//! trivially separable from known ones.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{RelationInstance, Span};

/// Shape of a synthetic open-set split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub known: usize,
    pub val_unknown: usize,
    pub test_unknown: usize,
    pub per_relation: usize,
    /// Trigger words per sentence, drawn without replacement from the
    /// relation's six.
    #[serde(default = "default_triggers")]
    pub triggers: usize,
    /// Probability that one trigger word is replaced by a filler.
    #[serde(default = "default_noise")]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_triggers() -> usize {
    2
}

fn default_noise() -> f64 {
    0.1
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            known: 6,
            val_unknown: 3,
            test_unknown: 3,
            per_relation: 50,
            triggers: default_triggers(),
            noise: default_noise(),
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.known == 0 || self.val_unknown == 0 || self.test_unknown == 0 {
            return Err(Error::Config(
                "known, val_unknown and test_unknown must be positive".into(),
            ));
        }
        if self.per_relation == 0 {
            return Err(Error::Config("per_relation must be positive".into()));
        }
        if !(1..=6).contains(&self.triggers) {
            return Err(Error::Config(format!("triggers {} not in 1..=6", self.triggers)));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return Err(Error::Config(format!("noise {} not in [0, 1]", self.noise)));
        }
        let total = self.known + self.val_unknown + self.test_unknown;
        if total > RELATIONS.len() {
            return Err(Error::Config(format!(
                "{total} relations requested but the template pool has {}",
                RELATIONS.len()
            )));
        }
        Ok(())
    }
}

/// Train / validation / test instance sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: Vec<RelationInstance>,
    pub validation: Vec<RelationInstance>,
    pub test: Vec<RelationInstance>,
}

/// Relation names of the pool, in assignment order.
pub fn relation_pool() -> impl Iterator<Item = &'static str> {
    RELATIONS.iter().map(|r| r.name)
}

/// Generates the three splits. Equal specs give identical output.
pub fn generate(spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let known = &RELATIONS[..spec.known];
    let val_unk = &RELATIONS[spec.known..spec.known + spec.val_unknown];
    let test_unk = &RELATIONS[spec.known + spec.val_unknown..][..spec.test_unknown];

    let mut train = Vec::with_capacity(spec.known * spec.per_relation);
    for rel in known {
        for _ in 0..spec.per_relation {
            train.push(sample(rel, spec, &mut rng));
        }
    }
    train.shuffle(&mut rng);

    let held_out = |unknown: &[RelationDef], rng: &mut ChaCha8Rng| {
        let n_unknown = unknown.len() * spec.per_relation;
        let mut out = Vec::with_capacity(2 * n_unknown);
        for rel in unknown {
            for _ in 0..spec.per_relation {
                out.push(sample(rel, spec, rng));
            }
        }
        for i in 0..n_unknown {
            out.push(sample(&known[i % known.len()], spec, rng));
        }
        out.shuffle(rng);
        out
    };
    let validation = held_out(val_unk, &mut rng);
    let test = held_out(test_unk, &mut rng);
    Ok(Splits {
        train,
        validation,
        test,
    })
}

#[derive(Clone, Copy)]
enum Slot {
    Head,
    Tail,
    Trigger,
    Filler,
}

#[derive(Clone, Copy)]
enum Kind {
    Person,
    Place,
    Org,
    Work,
    Instrument,
}

struct RelationDef {
    name: &'static str,
    head: Kind,
    tail: Kind,
    triggers: [&'static str; 6],
}

use Kind::*;
use Slot::*;

const SKELETONS: &[&[Slot]] = &[
    &[Filler, Head, Filler, Trigger, Filler, Trigger, Filler, Tail],
    &[Head, Trigger, Filler, Filler, Trigger, Tail, Filler],
    &[Filler, Tail, Filler, Trigger, Head, Trigger, Filler],
    &[Head, Filler, Filler, Trigger, Tail, Filler, Trigger],
    &[Filler, Head, Trigger, Filler, Tail, Filler, Filler, Trigger],
    &[Tail, Filler, Trigger, Filler, Trigger, Filler, Head],
];

const RELATIONS: &[RelationDef] = &[
    // known
    RelationDef { name: "place_of_birth", head: Person, tail: Place, triggers: ["born", "birthplace", "native", "hometown", "birth", "raised"] },
    RelationDef { name: "employer", head: Person, tail: Org, triggers: ["works", "employed", "hired", "joined", "staff", "employee"] },
    RelationDef { name: "spouse", head: Person, tail: Person, triggers: ["married", "wife", "husband", "wed", "spouse", "wedding"] },
    RelationDef { name: "instrument", head: Person, tail: Instrument, triggers: ["plays", "player", "performs", "solo", "virtuoso", "played"] },
    RelationDef { name: "headquarters", head: Org, tail: Place, triggers: ["headquartered", "based", "headquarters", "offices", "located", "seat"] },
    RelationDef { name: "author_of", head: Person, tail: Work, triggers: ["wrote", "author", "penned", "novel", "published", "writer"] },
    // validation unknown
    RelationDef { name: "place_of_death", head: Person, tail: Place, triggers: ["died", "death", "buried", "passed", "funeral", "native"] },
    RelationDef { name: "founder", head: Person, tail: Org, triggers: ["founded", "founder", "established", "created", "launched", "hired"] },
    RelationDef { name: "sibling", head: Person, tail: Person, triggers: ["brother", "sister", "sibling", "twin", "siblings", "wedding"] },
    // test unknown
    RelationDef { name: "member_of", head: Person, tail: Org, triggers: ["member", "joined", "belongs", "membership", "enrolled", "elected"] },
    RelationDef { name: "residence", head: Person, tail: Place, triggers: ["lives", "resides", "moved", "residence", "home", "hometown"] },
    RelationDef { name: "composer_of", head: Person, tail: Work, triggers: ["composed", "composer", "score", "symphony", "wrote", "opera"] },
    // spare
    RelationDef { name: "parent", head: Person, tail: Person, triggers: ["father", "mother", "son", "daughter", "parent", "child"] },
    RelationDef { name: "educated_at", head: Person, tail: Org, triggers: ["studied", "graduated", "alumnus", "university", "degree", "attended"] },
    RelationDef { name: "capital_of", head: Place, tail: Place, triggers: ["capital", "city", "largest", "country", "region", "seat"] },
    RelationDef { name: "owned_by", head: Org, tail: Org, triggers: ["owned", "subsidiary", "acquired", "bought", "stake", "parent"] },
];

const FIRST_NAMES: &[&str] = &[
    "Alice", "Bruno", "Clara", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas",
    "Keiko", "Lars", "Mira", "Nadia", "Omar", "Paula", "Quentin", "Rosa", "Stefan", "Tariq",
];

const LAST_NAMES: &[&str] = &[
    "Abbott", "Berger", "Castillo", "Dubois", "Eriksen", "Fischer", "Garcia", "Horvat", "Ivanova",
    "Jensen", "Kowalski", "Laurent", "Moreau", "Novak", "Okafor", "Petrov", "Quinn", "Rossi",
    "Schmidt", "Tanaka",
];

const PLACES: &[&str] = &[
    "Lisbon", "Oslo", "Krakow", "Porto", "Lyon", "Turin", "Ghent", "Bergen", "Malmo", "Graz",
    "Split", "Brno", "Tartu", "Aarhus", "Basel", "Cork", "Leeds", "Bilbao", "Seville", "Verona",
    "Dresden", "Utrecht", "Gdansk", "Riga", "Vilnius", "Zagreb", "Ljubljana", "Tampere",
];

const ORGS: &[&str] = &[
    "Acme", "Globex", "Initech", "Umbrella", "Hooli", "Vandelay", "Stark", "Wayne", "Cyberdyne",
    "Soylent", "Tyrell", "Aperture", "Oscorp", "Monarch", "Gringotts", "Wonka", "Nakatomi",
    "Pawnee", "Dunder", "Prestige", "Massive", "Sirius",
];

const WORKS: &[&str] = &[
    "Nightfall", "Ember", "Tidewater", "Solstice", "Driftwood", "Lanterns", "Meridian", "Hollow",
    "Starling", "Quarry", "Cascade", "Harbor", "Zenith", "Mosaic", "Undertow", "Aurora",
];

const INSTRUMENTS: &[&str] = &[
    "guitar", "piano", "violin", "cello", "trumpet", "saxophone", "drums", "flute", "oboe",
    "harp", "clarinet", "trombone", "banjo", "organ",
];

const FILLERS: &[&str] = &[
    "the", "a", "an", "of", "in", "on", "at", "by", "for", "with", "from", "to", "and", "but",
    "as", "that", "this", "it", "was", "is", "has", "had", "been", "also", "later", "early",
    "then", "after", "before", "during", "while", "since", "when", "where", "which", "who",
    "his", "her", "their", "its", "some", "many", "several", "few", "other", "same", "new",
    "old", "young", "long", "short", "first", "last", "next", "former", "local", "national",
    "famous", "known", "well", "often", "still", "once", "again", "never", "always", "soon",
    "year", "years", "decade", "century", "time", "season", "day", "week", "month", "summer",
    "winter", "spring", "autumn", "morning", "evening", "reports", "according", "sources",
    "said", "says", "noted", "told", "reporters", "interview", "statement", "press", "article",
    "story", "news", "record", "event", "occasion", "public", "private", "official", "career",
    "life", "period", "era", "moment", "reportedly", "widely", "briefly", "quietly", "notably",
    "mainly", "largely", "partly", "recently", "finally", "together", "alone",
];

fn entity(kind: Kind, rng: &mut ChaCha8Rng) -> Vec<String> {
    let pick = |pool: &[&str], rng: &mut ChaCha8Rng| pool.choose(rng).unwrap().to_string();
    match kind {
        Person => vec![pick(FIRST_NAMES, rng), pick(LAST_NAMES, rng)],
        Place => vec![pick(PLACES, rng)],
        Org => vec![pick(ORGS, rng)],
        Work => vec![pick(WORKS, rng)],
        Instrument => vec![pick(INSTRUMENTS, rng)],
    }
}

fn sample(rel: &RelationDef, spec: &SplitSpec, rng: &mut ChaCha8Rng) -> RelationInstance {
    let skeleton = *SKELETONS.choose(rng).unwrap();
    let mut slots: Vec<Slot> = skeleton.to_vec();
    // skeletons carry two trigger slots
    if spec.triggers < 2 {
        let last = slots.iter().rposition(|s| matches!(s, Trigger)).unwrap();
        slots[last] = Filler;
    }
    for _ in 2..spec.triggers {
        let at = rng.random_range(0..=slots.len());
        slots.insert(at, Trigger);
    }
    for _ in 0..rng.random_range(2..=5) {
        let at = rng.random_range(0..=slots.len());
        slots.insert(at, Filler);
    }
    let mut triggers: Vec<&str> = rel.triggers.choose_multiple(rng, spec.triggers).copied().collect();
    if rng.random_bool(spec.noise) {
        let which = rng.random_range(0..triggers.len());
        triggers[which] = FILLERS.choose(rng).unwrap();
    }
    let mut triggers = triggers.into_iter();

    let head_words = entity(rel.head, rng);
    let mut tail_words = entity(rel.tail, rng);
    while tail_words == head_words {
        tail_words = entity(rel.tail, rng);
    }

    let mut tokens = Vec::new();
    let (mut head, mut tail) = (Span(0, 0), Span(0, 0));
    for slot in slots {
        match slot {
            Head => {
                head = Span(tokens.len(), tokens.len() + head_words.len());
                tokens.extend(head_words.iter().cloned());
            }
            Tail => {
                tail = Span(tokens.len(), tokens.len() + tail_words.len());
                tokens.extend(tail_words.iter().cloned());
            }
            Trigger => tokens.push(triggers.next().unwrap().to_string()),
            Filler => tokens.push(FILLERS.choose(rng).unwrap().to_string()),
        }
    }
    RelationInstance::new(tokens, head, tail, rel.name)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    fn small() -> SplitSpec {
        SplitSpec {
            known: 4,
            val_unknown: 2,
            test_unknown: 2,
            per_relation: 50,
            triggers: 3,
            noise: 0.1,
            seed: 7,
        }
    }

    fn labels(v: &[RelationInstance]) -> HashSet<String> {
        v.iter().map(|i| i.relation.clone()).collect()
    }

    #[test]
    fn same_seed_same_data() {
        assert_eq!(generate(&small()).unwrap(), generate(&small()).unwrap());
        let other = SplitSpec { seed: 8, ..small() };
        assert_ne!(generate(&small()).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn sizes_and_disjoint_unknowns() {
        let s = generate(&small()).unwrap();
        assert_eq!(s.train.len(), 200);
        assert_eq!(s.validation.len(), 200);
        assert_eq!(s.test.len(), 200);
        let known = labels(&s.train);
        assert_eq!(known.len(), 4);
        let val_unk: HashSet<_> = labels(&s.validation).difference(&known).cloned().collect();
        let test_unk: HashSet<_> = labels(&s.test).difference(&known).cloned().collect();
        assert_eq!(val_unk.len(), 2);
        assert_eq!(test_unk.len(), 2);
        assert!(val_unk.is_disjoint(&test_unk));
        for split in [&s.validation, &s.test] {
            let n_known = split.iter().filter(|i| known.contains(&i.relation)).count();
            assert_eq!(n_known * 2, split.len());
        }
    }

    #[test]
    fn instances_are_valid() {
        let s = generate(&SplitSpec::default()).unwrap();
        for inst in s.train.iter().chain(&s.validation).chain(&s.test) {
            inst.validate().unwrap();
            assert!(inst.dep_path.is_none());
        }
    }

    #[test]
    fn pool_exhaustion_is_config_error() {
        let spec = SplitSpec {
            known: 10,
            val_unknown: 4,
            test_unknown: 4,
            ..small()
        };
        assert!(matches!(generate(&spec), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_field_names_the_field() {
        let err = serde_json::from_str::<SplitSpec>(
            r#"{"known":2,"val_unknown":1,"test_unknown":1,"per_relation":3,"colour":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("colour"));
    }
}
