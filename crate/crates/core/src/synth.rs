//! Seeded generator for synthetic clinical case reports.
//!
//! Documents are built from sentence templates filled with lexicon terms
//! drawn from a handful of clinical themes, so entity overlap and embedding
//! similarity cluster by theme. Output is a pure function of the seed.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extraction::EntityType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthDocument {
    pub id: String,
    pub title: String,
    pub body: String,
}

struct Theme {
    name: &'static str,
    terms: [&'static [&'static str]; 9],
}

// Column order of `Theme::terms`.
const COLUMNS: [EntityType; 9] = [
    EntityType::Dis,
    EntityType::Sym,
    EntityType::Bod,
    EntityType::Ite,
    EntityType::Pro,
    EntityType::Dru,
    EntityType::Equ,
    EntityType::Mic,
    EntityType::Dep,
];

fn column(t: EntityType) -> usize {
    COLUMNS.iter().position(|&c| c == t).expect("every type has a column")
}

const THEMES: &[Theme] = &[
    Theme {
        name: "jaw osteonecrosis",
        terms: [
            &["mronj", "osteonecrosis", "osteoporosis", "multiple myeloma", "breast cancer", "prostate cancer"],
            &["bone exposure", "jaw pain", "swelling", "pus", "fistula", "loose teeth", "halitosis"],
            &["mandible", "maxilla", "alveolar bone", "jaw", "molar"],
            &["cbct", "panoramic radiograph", "ct", "serum ctx", "bone scan"],
            &["tooth extraction", "debridement", "sequestrectomy", "antibiotic therapy", "irrigation"],
            &["zoledronic acid", "denosumab", "alendronate", "bisphosphonate", "teriparatide", "pentoxifylline"],
            &["piezosurgery device", "surgical drill", "denture"],
            &["actinomyces", "fusobacterium"],
            &["oral and maxillofacial surgery", "oncology"],
        ],
    },
    Theme {
        name: "periodontal disease",
        terms: [
            &["periodontitis", "diabetes mellitus", "pericoronitis", "dental caries"],
            &["bleeding", "tooth mobility", "halitosis", "swelling", "pain"],
            &["gingiva", "periodontal ligament", "alveolar bone", "premolar", "molar"],
            &["panoramic radiograph", "x-ray", "blood test"],
            &["scaling", "flap surgery", "bone grafting", "irrigation"],
            &["chlorhexidine", "metronidazole", "amoxicillin", "metformin", "insulin"],
            &["ultrasonic scaler", "scalpel", "suture"],
            &["porphyromonas gingivalis", "prevotella", "fusobacterium"],
            &["periodontology", "endocrinology"],
        ],
    },
    Theme {
        name: "gastric ulcer",
        terms: [
            &["gastritis", "peptic ulcer", "anemia", "crohn's disease"],
            &["abdominal pain", "nausea", "vomiting", "weight loss", "fatigue", "bleeding"],
            &["stomach", "liver"],
            &["blood test", "histopathology", "ultrasound", "c-reactive protein"],
            &["gastroscopy", "biopsy", "antibiotic therapy"],
            &["omeprazole", "amoxicillin", "metronidazole", "ibuprofen", "prednisone"],
            &["endoscope", "catheter"],
            &["helicobacter pylori", "candida albicans"],
            &["gastroenterology", "internal medicine", "emergency department"],
        ],
    },
    Theme {
        name: "oral cancer",
        terms: [
            &["oral cancer", "squamous cell carcinoma", "leukoplakia", "oral lichen planus"],
            &["ulceration", "dysphagia", "numbness", "weight loss", "pain", "erythema"],
            &["tongue", "oral mucosa", "lymph node", "palate", "mandible"],
            &["biopsy report", "histopathology", "mri", "pet-ct", "ct"],
            &["biopsy", "resection", "radiotherapy", "chemotherapy"],
            &["methotrexate", "bevacizumab", "dexamethasone", "lidocaine"],
            &["scalpel", "laser", "suture"],
            &["candida albicans", "herpes simplex virus"],
            &["oncology", "radiology", "oral and maxillofacial surgery"],
        ],
    },
    Theme {
        name: "facial infection",
        terms: [
            &["cellulitis", "osteomyelitis", "sinusitis", "pericoronitis"],
            &["fever", "swelling", "trismus", "pus", "erythema", "pain"],
            &["face", "maxillary sinus", "mandible", "lymph node"],
            &["white blood cell count", "c-reactive protein", "culture and sensitivity", "ct"],
            &["surgical drainage", "antibiotic therapy", "tooth extraction", "hyperbaric oxygen therapy"],
            &["clindamycin", "penicillin", "amoxicillin", "acetaminophen"],
            &["syringe", "catheter", "scalpel"],
            &["staphylococcus aureus", "streptococcus", "pseudomonas aeruginosa", "enterococcus"],
            &["emergency department", "oral and maxillofacial surgery"],
        ],
    },
    Theme {
        name: "endodontic pain",
        terms: [
            &["pulpitis", "dental caries", "trigeminal neuralgia", "temporomandibular disorder"],
            &["pain", "headache", "paresthesia", "swelling", "foul taste"],
            &["tooth", "molar", "premolar", "jaw"],
            &["x-ray", "cbct", "panoramic radiograph"],
            &["root canal treatment", "curettage", "tooth extraction"],
            &["ibuprofen", "acetaminophen", "lidocaine", "amoxicillin"],
            &["surgical drill", "orthodontic bracket", "splint", "mouthguard"],
            &["enterococcus", "streptococcus"],
            &["stomatology", "prosthodontics"],
        ],
    },
    Theme {
        name: "rheumatic bone loss",
        terms: [
            &["rheumatoid arthritis", "osteoporosis", "hypertension", "hepatitis"],
            &["fatigue", "pain", "swelling", "dry mouth"],
            &["femur", "bone", "cortical bone", "jaw"],
            &["bone scan", "x-ray", "blood test", "serum ctx"],
            &["bone grafting", "implant placement", "resection"],
            &["methotrexate", "prednisone", "alendronate", "denosumab", "tocopherol"],
            &["bone plate", "dental implant"],
            &["staphylococcus aureus"],
            &["orthopedics", "hematology", "internal medicine"],
        ],
    },
];

const TEMPLATES: &[&str] = &[
    "A patient with {dis} presented with {sym} involving the {bod}.",
    "The patient had received {dru} for {dis} over several years.",
    "{ite} showed changes in the {bod} consistent with {dis}.",
    "On examination there was {sym} and {sym} around the {bod}.",
    "Treatment consisted of {pro} followed by {dru}.",
    "Cultures grew {mic}, and {dru} was started.",
    "The case was referred to {dep} for {pro}.",
    "{pro} was performed with a {equ} under local anesthesia with {dru}.",
    "Follow-up {ite} confirmed resolution of {sym}.",
    "A history of {dis} and {dis} was noted by {dep}.",
    "The {bod} showed {sym} after {pro}.",
    "{mic} was identified in samples from the {bod}.",
];

const FILLERS: &[&str] = &[
    "The patient consented to publication of this report.",
    "Informed consent was obtained before the intervention.",
    "The postoperative course was uneventful.",
    "Regular follow-up visits were scheduled.",
    "Family history was unremarkable.",
    "The patient was a non-smoker with no alcohol use.",
];

fn fill(template: &str, theme: &Theme, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = open + rest[open..].find('}').expect("closed placeholder");
        let code: EntityType = rest[open + 1..close].parse().expect("known type");
        let choices = theme.terms[column(code)];
        out.push_str(choices.choose(rng).expect("non-empty term list"));
        rest = &rest[close + 1..];
    }
    out.push_str(rest);
    let mut chars = out.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => out,
    }
}

fn paragraph(theme: &Theme, rng: &mut ChaCha8Rng) -> String {
    let sentences = rng.gen_range(2..=4);
    (0..sentences)
        .map(|_| {
            if rng.gen_bool(0.12) {
                FILLERS.choose(rng).expect("fillers").to_string()
            } else {
                fill(TEMPLATES.choose(rng).expect("templates"), theme, rng)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `count` documents with ids `doc-0000`, `doc-0001`, ...
pub fn synth_documents(count: usize, seed: u64) -> Vec<SynthDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let theme = &THEMES[rng.gen_range(0..THEMES.len())];
            let other = &THEMES[rng.gen_range(0..THEMES.len())];
            let paragraphs: Vec<String> = (0..rng.gen_range(3..=6))
                .map(|_| {
                    if rng.gen_bool(0.15) {
                        paragraph(other, &mut rng)
                    } else if rng.gen_bool(0.08) {
                        FILLERS.choose(&mut rng).expect("fillers").to_string()
                    } else {
                        paragraph(theme, &mut rng)
                    }
                })
                .collect();
            let dis = theme.terms[column(EntityType::Dis)].choose(&mut rng).expect("diseases");
            SynthDocument {
                id: format!("doc-{i:04}"),
                title: format!("Case {}: {} ({})", i + 1, dis, theme.name),
                body: paragraphs.join("\n\n"),
            }
        })
        .collect()
}

pub fn write_jsonl<W: Write>(docs: &[SynthDocument], mut out: W) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut out, d)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{Lexicon, LexiconExtractor, EntityExtractor};

    #[test]
    fn deterministic() {
        assert_eq!(synth_documents(20, 7), synth_documents(20, 7));
        assert_ne!(synth_documents(20, 7), synth_documents(20, 8));
    }

    #[test]
    fn every_theme_term_is_in_the_lexicon() {
        let lex = Lexicon::builtin();
        for theme in THEMES {
            for (code, terms) in theme.terms.iter().enumerate() {
                for t in *terms {
                    assert_eq!(lex.get(t), Some(COLUMNS[code]), "{t}");
                }
            }
        }
    }

    #[test]
    fn documents_carry_entities() {
        let ex = LexiconExtractor::new(Lexicon::builtin());
        for d in synth_documents(10, 1) {
            assert!(!ex.extract(&d.body).unwrap().is_empty());
            assert!(d.body.split("\n\n").count() >= 3);
        }
    }
}
