//! Deterministic synthetic knowledge base and template questions.
//!
//! About 100 named entities across a dozen categories, a couple of dozen
//! predicates, 20 question templates and 200 questions. Some names are
//! deliberately shared ("Chicago" is a city, a band and a film) so the
//! linker has real work to do, and one country carries a small government
//! fragment with past and current office holders, dated terms and titles.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::QaExample;
use crate::error::Result;
use crate::kb::{Chain, Kb, KbBuilder};

pub const TRIPLES_FILE: &str = "triples.tsv";
pub const NAMES_FILE: &str = "names.tsv";
pub const DESCRIPTIONS_FILE: &str = "descriptions.tsv";
pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

const COUNTRIES: [&str; 6] = ["Philippines", "United States", "Kenya", "Norway", "Peru", "Portugal"];
/// City name and index of its country.
const CITIES: [(&str, usize); 14] = [
    ("Manila", 0),
    ("Cebu", 0),
    ("Davao", 0),
    ("Chicago", 1),
    ("Boston", 1),
    ("Nairobi", 2),
    ("Mombasa", 2),
    ("Oslo", 3),
    ("Bergen", 3),
    ("Lima", 4),
    ("Cusco", 4),
    ("Lisbon", 5),
    ("Porto", 5),
    ("Braga", 5),
];
const CAPITALS: [usize; 6] = [0, 4, 5, 7, 9, 11];
const PERSONS: [&str; 30] = [
    "Robert Lamm",
    "Robert Lamm",
    "Ana Reyes",
    "Jose Santos",
    "Maria Cruz",
    "Luis Garcia",
    "Elena Torres",
    "Paolo Rivera",
    "Grace Mendoza",
    "Daniel Okoro",
    "Amina Wanjiru",
    "Peter Otieno",
    "Ingrid Larsen",
    "Erik Dahl",
    "Sofia Nilsen",
    "Carlos Quispe",
    "Lucia Flores",
    "Miguel Huaman",
    "Ines Costa",
    "Tiago Almeida",
    "Rita Sousa",
    "James Porter",
    "Laura Bennett",
    "Henry Walsh",
    "Clara Hughes",
    "Samuel Brooks",
    "Nora Field",
    "Victor Hale",
    "Irene Shaw",
    "Oscar Lind",
];
const BANDS: [&str; 8] = [
    "Chicago",
    "The Lanterns",
    "Blue Harbor",
    "Iron Meadow",
    "Northern Lights",
    "Silver Creek",
    "Velvet Road",
    "Copper Sky",
];
const SONGS: [&str; 10] = [
    "Harbor Lights",
    "Morning Train",
    "Glass River",
    "Open Road",
    "Paper Moon",
    "Quiet Storm",
    "Summer Rain",
    "Falling Leaves",
    "Golden Hour",
    "City Nights",
];
const FILMS: [&str; 8] = [
    "Chicago",
    "Philippines",
    "The Long Winter",
    "Red Horizon",
    "Silent Coast",
    "Last Orbit",
    "Broken Compass",
    "Night Market",
];
const BOOKS: [&str; 6] = [
    "Philippines",
    "The Glass Garden",
    "Northern Letters",
    "A Quiet Year",
    "Salt and Stone",
    "River Songs",
];
const COMPANIES: [&str; 6] = [
    "Apex Motors",
    "Blue Ocean Foods",
    "Nova Systems",
    "Harbor Bank",
    "Summit Air",
    "Lumen Pharma",
];
/// Team name and index of its home city.
const TEAMS: [(&str, usize); 6] = [
    ("Manila Eagles", 0),
    ("Oslo Vikings", 7),
    ("Lima Condors", 9),
    ("Nairobi Lions", 5),
    ("Lisbon Sailors", 11),
    ("Boston Hawks", 4),
];
const TITLES: [&str; 3] = ["President", "Vice President", "Prime Minister"];
const GENRES: [&str; 3] = ["Rock", "Jazz", "Folk"];

const LYRICISTS: [usize; 10] = [0, 9, 10, 11, 12, 13, 26, 27, 28, 29];
const DIRECTORS: [usize; 8] = [14, 15, 16, 17, 18, 19, 20, 21];
const AUTHORS: [usize; 5] = [1, 20, 21, 22, 23];
const FOUNDERS: [usize; 4] = [24, 25, 26, 27];
const ATHLETES: [usize; 8] = [22, 23, 24, 25, 26, 27, 28, 29];
/// Office holders of the first country: past presidents, the current
/// president, a past and a current vice president.
const PH_PAST_PRESIDENTS: [usize; 4] = [2, 3, 4, 5];
const PH_PRESIDENT: usize = 6;
const PH_VICE_PRESIDENTS: [usize; 2] = [7, 8];

pub mod predicates {
    pub const CONTAINEDBY: &str = "location.location.containedby";
    pub const CAPITAL: &str = "location.country.capital";
    pub const BIRTHPLACE: &str = "people.person.place_of_birth";
    pub const NATIONALITY: &str = "people.person.nationality";
    pub const LYRICS_WRITTEN: &str = "music.lyricist.lyrics_written";
    pub const LYRICIST: &str = "music.composition.lyricist";
    pub const GENRE: &str = "music.artist.genre";
    pub const ORIGIN: &str = "music.artist.origin";
    pub const TRACK: &str = "music.artist.track";
    pub const RECORDED_BY: &str = "music.recording.artist";
    pub const DIRECTED_BY: &str = "film.film.directed_by";
    pub const FILMS_DIRECTED: &str = "film.director.film";
    pub const FILM_COUNTRY: &str = "film.film.country";
    pub const AUTHOR: &str = "book.written_work.author";
    pub const BOOK_SUBJECT: &str = "book.written_work.subject";
    pub const HEADQUARTERS: &str = "organization.organization.headquarters";
    pub const FOUNDERS: &str = "organization.organization.founders";
    pub const TEAM_LOCATION: &str = "sports.sports_team.location";
    pub const PLAYS_FOR: &str = "sports.pro_athlete.teams";
    pub const ROSTER_TEAM: &str = "sports.sports_team_roster.team";
    pub const GOVERNING: &str = "government.governmental_jurisdiction.governing_officials";
    pub const OFFICE_HOLDER: &str = "government.government_position_held.office_holder";
    pub const TITLE: &str = "government.government_position_held.basic_title";
    pub const FROM: &str = "government.government_position_held.from";
    pub const TO: &str = "government.government_position_held.to";
}
use predicates as p;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Cat {
    Country,
    City,
    Person,
    Band,
    Song,
    Film,
    Book,
    Company,
    Team,
    Title,
    Genre,
}

struct Template {
    text: &'static str,
    chain: &'static [&'static str],
}

const TEMPLATES: [Template; 20] = [
    Template {
        text: "where was {} born ?",
        chain: &[p::BIRTHPLACE],
    },
    Template {
        text: "what country is {} from ?",
        chain: &[p::NATIONALITY],
    },
    Template {
        text: "which songs have {} written lyrics to ?",
        chain: &[p::LYRICS_WRITTEN],
    },
    Template {
        text: "who wrote the lyrics of {} ?",
        chain: &[p::LYRICIST],
    },
    Template {
        text: "what genre of music does {} play ?",
        chain: &[p::GENRE],
    },
    Template {
        text: "what city does {} come from ?",
        chain: &[p::ORIGIN],
    },
    Template {
        text: "who recorded {} ?",
        chain: &[p::RECORDED_BY],
    },
    Template {
        text: "who directed {} ?",
        chain: &[p::DIRECTED_BY],
    },
    Template {
        text: "in which country was {} filmed ?",
        chain: &[p::FILM_COUNTRY],
    },
    Template {
        text: "who is the author of {} ?",
        chain: &[p::AUTHOR],
    },
    Template {
        text: "what is the book {} about ?",
        chain: &[p::BOOK_SUBJECT],
    },
    Template {
        text: "where is {} headquartered ?",
        chain: &[p::HEADQUARTERS],
    },
    Template {
        text: "who founded {} ?",
        chain: &[p::FOUNDERS],
    },
    Template {
        text: "where do {} play their home games ?",
        chain: &[p::TEAM_LOCATION],
    },
    Template {
        text: "what is the capital of {} ?",
        chain: &[p::CAPITAL],
    },
    Template {
        text: "which country is {} in ?",
        chain: &[p::CONTAINEDBY],
    },
    Template {
        text: "who was elected president of {} ?",
        chain: &[p::GOVERNING, p::OFFICE_HOLDER],
    },
    Template {
        text: "which team does {} play for ?",
        chain: &[p::PLAYS_FOR, p::ROSTER_TEAM],
    },
    Template {
        text: "what films has {} directed ?",
        chain: &[p::FILMS_DIRECTED],
    },
    Template {
        text: "what songs did {} record ?",
        chain: &[p::TRACK],
    },
];

/// Index of the template whose answers need the temporal and type filters.
pub const OFFICE_TEMPLATE: usize = 16;

/// Generated files, kept in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    /// `(subject, predicate, object, object_is_mediator)`
    pub triples: Vec<(String, String, String, bool)>,
    pub names: Vec<(String, String)>,
    pub descriptions: Vec<(String, String)>,
    pub train: Vec<QaExample>,
    pub dev: Vec<QaExample>,
    pub test: Vec<QaExample>,
    /// The first country's id, the one with the government fragment.
    pub figure_country: String,
}

struct Builder {
    rng: ChaCha8Rng,
    triples: Vec<(String, String, String, bool)>,
    names: Vec<(String, String)>,
    descriptions: Vec<(String, String)>,
    ids: BTreeMap<(Cat, usize), String>,
    next_cvt: usize,
}

impl Builder {
    fn id(&self, cat: Cat, i: usize) -> String {
        self.ids[&(cat, i)].clone()
    }

    fn add(&mut self, s: &str, pred: &str, o: &str) {
        self.triples.push((s.into(), pred.into(), o.into(), false));
    }

    fn cvt(&mut self, s: &str, pred: &str) -> String {
        self.next_cvt += 1;
        let id = format!("m.cvt{:03}", self.next_cvt);
        self.triples.push((s.into(), pred.into(), id.clone(), true));
        id
    }
}

fn name_of(cat: Cat, i: usize) -> &'static str {
    match cat {
        Cat::Country => COUNTRIES[i],
        Cat::City => CITIES[i].0,
        Cat::Person => PERSONS[i],
        Cat::Band => BANDS[i],
        Cat::Song => SONGS[i],
        Cat::Film => FILMS[i],
        Cat::Book => BOOKS[i],
        Cat::Company => COMPANIES[i],
        Cat::Team => TEAMS[i].0,
        Cat::Title => TITLES[i],
        Cat::Genre => GENRES[i],
    }
}

const CATEGORIES: [(Cat, usize); 11] = [
    (Cat::Country, COUNTRIES.len()),
    (Cat::City, CITIES.len()),
    (Cat::Person, PERSONS.len()),
    (Cat::Band, BANDS.len()),
    (Cat::Song, SONGS.len()),
    (Cat::Film, FILMS.len()),
    (Cat::Book, BOOKS.len()),
    (Cat::Company, COMPANIES.len()),
    (Cat::Team, TEAMS.len()),
    (Cat::Title, TITLES.len()),
    (Cat::Genre, GENRES.len()),
];

fn year(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> u32 {
    rng.gen_range(lo..hi)
}

/// Builds the toy data set. The same seed always gives the same data.
pub fn generate_toy(seed: u64) -> ToyData {
    let mut b = Builder {
        rng: ChaCha8Rng::seed_from_u64(seed),
        triples: Vec::new(),
        names: Vec::new(),
        descriptions: Vec::new(),
        ids: BTreeMap::new(),
        next_cvt: 0,
    };

    // Ids are shuffled so that id order carries no category information.
    let total: usize = CATEGORIES.iter().map(|c| c.1).sum();
    let mut numbers: Vec<usize> = (0..total).collect();
    numbers.shuffle(&mut b.rng);
    let mut k = 0;
    for (cat, n) in CATEGORIES {
        for i in 0..n {
            let id = format!("m.0{:04x}", 0x1a00 + numbers[k] * 7);
            k += 1;
            b.names.push((id.clone(), name_of(cat, i).to_string()));
            b.ids.insert((cat, i), id);
        }
    }

    use Cat::*;
    for (i, &(_, country)) in CITIES.iter().enumerate() {
        let (c, k) = (b.id(City, i), b.id(Country, country));
        b.add(&c, p::CONTAINEDBY, &k);
        b.descriptions
            .push((c, format!("city in {}", COUNTRIES[country].to_lowercase())));
    }
    for (k, &city) in CAPITALS.iter().enumerate() {
        let (kid, cid) = (b.id(Country, k), b.id(City, city));
        b.add(&kid, p::CAPITAL, &cid);
        b.descriptions.push((kid, "sovereign country".into()));
    }

    // People: birthplace and nationality for everybody.
    let ph_holders: BTreeSet<usize> = PH_PAST_PRESIDENTS
        .iter()
        .chain(&[PH_PRESIDENT])
        .chain(&PH_VICE_PRESIDENTS)
        .copied()
        .collect();
    for i in 0..PERSONS.len() {
        let city = if ph_holders.contains(&i) {
            b.rng.gen_range(0..3)
        } else {
            b.rng.gen_range(0..CITIES.len())
        };
        let (pid, cid, kid) = (b.id(Person, i), b.id(City, city), b.id(Country, CITIES[city].1));
        b.add(&pid, p::BIRTHPLACE, &cid);
        b.add(&pid, p::NATIONALITY, &kid);
        let role = if LYRICISTS.contains(&i) {
            "musician and lyricist"
        } else if DIRECTORS.contains(&i) {
            "film director"
        } else if AUTHORS.contains(&i) {
            "writer and novelist"
        } else if ATHLETES.contains(&i) {
            "professional athlete"
        } else {
            "politician"
        };
        b.descriptions.push((pid, role.into()));
    }

    for i in 0..TITLES.len() {
        let id = b.id(Title, i);
        b.descriptions.push((id, "government office".into()));
    }
    for i in 0..GENRES.len() {
        let id = b.id(Genre, i);
        b.descriptions.push((id, "music genre".into()));
    }

    // Bands, songs and lyricists.
    for i in 0..BANDS.len() {
        let genre = if i == 0 { 0 } else { b.rng.gen_range(0..GENRES.len()) };
        let city = if i == 0 { 3 } else { b.rng.gen_range(0..CITIES.len()) };
        let (bid, gid, cid) = (b.id(Band, i), b.id(Genre, genre), b.id(City, city));
        b.add(&bid, p::GENRE, &gid);
        b.add(&bid, p::ORIGIN, &cid);
        b.descriptions.push((
            bid,
            format!(
                "{} band from {}",
                GENRES[genre].to_lowercase(),
                CITIES[city].0.to_lowercase()
            ),
        ));
    }
    for i in 0..SONGS.len() {
        let band = if i < BANDS.len() {
            i
        } else {
            b.rng.gen_range(0..BANDS.len())
        };
        let lyricist = LYRICISTS[i % LYRICISTS.len()];
        let (sid, bid, lid) = (b.id(Song, i), b.id(Band, band), b.id(Person, lyricist));
        b.add(&sid, p::RECORDED_BY, &bid);
        b.add(&bid, p::TRACK, &sid);
        b.add(&sid, p::LYRICIST, &lid);
        b.add(&lid, p::LYRICS_WRITTEN, &sid);
        b.descriptions
            .push((sid, format!("song recorded by {}", BANDS[band].to_lowercase())));
    }

    // Films and books.
    for i in 0..FILMS.len() {
        let director = DIRECTORS[i % DIRECTORS.len()];
        let country = if i == 1 { 0 } else { b.rng.gen_range(0..COUNTRIES.len()) };
        let (fid, did, kid) = (b.id(Film, i), b.id(Person, director), b.id(Country, country));
        b.add(&fid, p::DIRECTED_BY, &did);
        b.add(&did, p::FILMS_DIRECTED, &fid);
        b.add(&fid, p::FILM_COUNTRY, &kid);
        b.descriptions.push((fid, "feature film".into()));
    }
    for i in 0..BOOKS.len() {
        let author = AUTHORS[i % AUTHORS.len()];
        let subject = if i == 0 { 0 } else { b.rng.gen_range(0..COUNTRIES.len()) };
        let (bid, aid, kid) = (b.id(Book, i), b.id(Person, author), b.id(Country, subject));
        b.add(&bid, p::AUTHOR, &aid);
        b.add(&bid, p::BOOK_SUBJECT, &kid);
        b.descriptions.push((bid, "history book".into()));
    }

    // Companies and teams.
    for i in 0..COMPANIES.len() {
        let city = b.rng.gen_range(0..CITIES.len());
        let founder = FOUNDERS[i % FOUNDERS.len()];
        let (cid, hq, fid) = (b.id(Company, i), b.id(City, city), b.id(Person, founder));
        b.add(&cid, p::HEADQUARTERS, &hq);
        b.add(&cid, p::FOUNDERS, &fid);
        b.descriptions
            .push((cid, format!("company based in {}", CITIES[city].0.to_lowercase())));
    }
    for (i, &(_, city)) in TEAMS.iter().enumerate() {
        let (tid, cid) = (b.id(Team, i), b.id(City, city));
        b.add(&tid, p::TEAM_LOCATION, &cid);
        b.descriptions.push((tid, "professional sports team".into()));
    }
    for (k, &athlete) in ATHLETES.iter().enumerate() {
        let (aid, tid) = (b.id(Person, athlete), b.id(Team, k % TEAMS.len()));
        let roster = b.cvt(&aid, p::PLAYS_FOR);
        b.add(&roster, p::ROSTER_TEAM, &tid);
    }

    // Government fragments. Terms are dated; only finished terms have an
    // end date.
    let office = |b: &mut Builder, country: usize, person: usize, title: usize, from: u32, to: Option<u32>| {
        let (kid, pid, tid) = (b.id(Country, country), b.id(Person, person), b.id(Title, title));
        let m = b.cvt(&kid, p::GOVERNING);
        b.add(&m, p::OFFICE_HOLDER, &pid);
        b.add(&m, p::TITLE, &tid);
        b.add(&m, p::FROM, &format!("{from}-07-01"));
        if let Some(to) = to {
            b.add(&m, p::TO, &format!("{to}-06-30"));
        }
    };
    let mut start = 1986;
    for &president in &PH_PAST_PRESIDENTS {
        let len = year(&mut b.rng, 4, 7);
        office(&mut b, 0, president, 0, start, Some(start + len));
        start += len;
    }
    office(&mut b, 0, PH_PRESIDENT, 0, start, None);
    office(&mut b, 0, PH_VICE_PRESIDENTS[0], 1, start - 6, Some(start));
    office(&mut b, 0, PH_VICE_PRESIDENTS[1], 1, start, None);
    for country in 1..COUNTRIES.len() {
        let (past, current) = (9 + 2 * (country - 1), 10 + 2 * (country - 1));
        let from = year(&mut b.rng, 1990, 2005);
        let to = from + year(&mut b.rng, 4, 9);
        office(&mut b, country, past, 0, from, Some(to));
        office(&mut b, country, current, 0, to, None);
    }

    let mut kb = KbBuilder::new();
    for (s, pr, o, m) in &b.triples {
        kb.fact(s, pr, o, *m).expect("generated facts are consistent");
    }
    for (id, name) in &b.names {
        kb.name(id, name);
    }
    let kb = kb.build();

    let questions = make_questions(&b, &kb);
    let (train, dev, test) = split(questions, &mut b.rng);
    ToyData {
        triples: b.triples,
        names: b.names,
        descriptions: b.descriptions,
        train,
        dev,
        test,
        figure_country: b.ids[&(Cat::Country, 0)].clone(),
    }
}

fn subjects(template: usize) -> Vec<(Cat, usize)> {
    use Cat::*;
    let all = |cat: Cat, n: usize| (0..n).map(|i| (cat, i)).collect::<Vec<_>>();
    let some = |cat: Cat, idx: &[usize]| idx.iter().map(|&i| (cat, i)).collect::<Vec<_>>();
    match template {
        // The second "Robert Lamm" would make these two questions
        // indistinguishable from the first one's.
        0 | 1 => all(Person, PERSONS.len())
            .into_iter()
            .filter(|&(_, i)| i != 1)
            .collect(),
        2 => some(Person, &LYRICISTS),
        3 | 6 => all(Song, SONGS.len()),
        4 | 5 | 19 => all(Band, BANDS.len()),
        7 | 8 => all(Film, FILMS.len()),
        9 | 10 => all(Book, BOOKS.len()),
        11 | 12 => all(Company, COMPANIES.len()),
        13 => all(Team, TEAMS.len()),
        14 | 16 => all(Country, COUNTRIES.len()),
        15 => all(City, CITIES.len()),
        17 => some(Person, &ATHLETES),
        18 => some(Person, &DIRECTORS),
        _ => unreachable!("template index out of range"),
    }
}

/// Past presidents: office-holder paths whose term has ended under the
/// "President" title.
fn past_presidents(kb: &Kb, country: &str) -> BTreeSet<String> {
    let chain = Chain::pair(p::GOVERNING, p::OFFICE_HOLDER).expect("valid chain");
    let mut out = BTreeSet::new();
    for path in kb.execute_paths(country, &chain).expect("country exists") {
        let facts: Vec<_> = kb.facts_of(&path[1]).collect();
        let ended = facts.iter().any(|f| f.predicate == p::TO);
        let president = facts.iter().any(|f| {
            f.predicate == p::TITLE
                && kb
                    .entity(&f.object)
                    .is_ok_and(|e| e.names.iter().any(|n| n == "President"))
        });
        if ended && president {
            out.insert(path[2].clone());
        }
    }
    out
}

struct Question {
    template: usize,
    example: QaExample,
}

fn make_questions(b: &Builder, kb: &Kb) -> Vec<Question> {
    let mut out = Vec::new();
    for (t, template) in TEMPLATES.iter().enumerate() {
        let chain = Chain::new(template.chain.iter().map(|s| s.to_string()).collect()).expect("valid chain");
        for (cat, i) in subjects(t) {
            let entity = b.id(cat, i);
            let name = name_of(cat, i);
            let (before, after) = template.text.split_once("{}").expect("template has a slot");
            let question = format!("{before}{name}{after}");
            let start = before.chars().count();
            let answers = if t == OFFICE_TEMPLATE {
                past_presidents(kb, &entity)
            } else {
                kb.execute(&entity, &chain).expect("entity exists")
            };
            assert!(!answers.is_empty(), "{question} has no answer");
            out.push(Question {
                template: t,
                example: QaExample {
                    id: String::new(),
                    question,
                    gold_entity: entity,
                    mention_start: start,
                    mention_end: start + name.chars().count(),
                    chain: chain.clone(),
                    answers,
                },
            });
        }
    }
    out
}

/// Held-out splits only contain (template, entity) pairs whose entity is
/// still asked about in training under another template and whose template
/// still has at least three training entities. The office question about
/// the first country always stays in training.
fn split(questions: Vec<Question>, rng: &mut ChaCha8Rng) -> (Vec<QaExample>, Vec<QaExample>, Vec<QaExample>) {
    const TEST: usize = 40;
    const DEV: usize = 20;
    let mut bucket = vec![0u8; questions.len()];
    let mut order: Vec<usize> = (0..questions.len()).collect();
    order.shuffle(rng);
    let figure = &questions
        .iter()
        .find(|q| q.template == OFFICE_TEMPLATE)
        .expect("office questions exist")
        .example
        .gold_entity
        .clone();
    let (mut n_test, mut n_dev) = (0, 0);
    for i in order {
        let q = &questions[i];
        if q.template == OFFICE_TEMPLATE && &q.example.gold_entity == figure {
            continue;
        }
        let in_train = |j: usize| bucket[j] == 0 && j != i;
        let entity_elsewhere =
            (0..questions.len()).any(|j| in_train(j) && questions[j].example.gold_entity == q.example.gold_entity);
        let template_train = (0..questions.len())
            .filter(|&j| in_train(j) && questions[j].template == q.template)
            .count();
        if !entity_elsewhere || template_train < 3 {
            continue;
        }
        if n_test < TEST {
            bucket[i] = 2;
            n_test += 1;
        } else if n_dev < DEV {
            bucket[i] = 1;
            n_dev += 1;
        }
    }
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for (q, b) in questions.into_iter().zip(bucket) {
        match b {
            0 => out.0.push(q.example),
            1 => out.1.push(q.example),
            _ => out.2.push(q.example),
        }
    }
    for (name, part) in SPLITS.iter().zip([&mut out.0, &mut out.1, &mut out.2]) {
        for (k, ex) in part.iter_mut().enumerate() {
            ex.id = format!("{name}-{}", k + 1);
        }
    }
    out
}

impl ToyData {
    pub fn kb(&self) -> Kb {
        let mut b = KbBuilder::new();
        for (s, pr, o, m) in &self.triples {
            b.fact(s, pr, o, *m).expect("generated facts are consistent");
        }
        for (id, name) in &self.names {
            b.name(id, name);
        }
        for (id, d) in &self.descriptions {
            b.description(id, d).expect("one description per entity");
        }
        b.build()
    }

    pub fn all_questions(&self) -> impl Iterator<Item = &QaExample> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }

    pub fn triples_tsv(&self) -> String {
        let mut out = String::new();
        for (s, pr, o, m) in &self.triples {
            out.push_str(&format!("{s}\t{pr}\t{o}\t{}\n", u8::from(*m)));
        }
        out
    }

    pub fn names_tsv(&self) -> String {
        self.names.iter().map(|(id, n)| format!("{id}\t{n}\n")).collect()
    }

    pub fn descriptions_tsv(&self) -> String {
        self.descriptions.iter().map(|(id, d)| format!("{id}\t{d}\n")).collect()
    }

    /// Writes the three KB files and the three dataset splits into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join(TRIPLES_FILE), self.triples_tsv())?;
        fs::write(dir.join(NAMES_FILE), self.names_tsv())?;
        fs::write(dir.join(DESCRIPTIONS_FILE), self.descriptions_tsv())?;
        for (name, part) in SPLITS.iter().zip([&self.train, &self.dev, &self.test]) {
            crate::dataset::write_examples(dir.join(format!("{name}.tsv")), part)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let toy = generate_toy(7);
        let kb = toy.kb();
        let named = kb.entities().filter(|e| !e.names.is_empty()).count();
        assert_eq!(named, 100);
        assert_eq!(toy.all_questions().count(), 200);
        assert_eq!(kb.predicates().len(), 25);
        assert!(toy.test.len() >= 30, "test split has {}", toy.test.len());
    }

    #[test]
    fn same_seed_same_files() {
        let (a, b) = (generate_toy(3), generate_toy(3));
        assert_eq!(a, b);
        assert_eq!(a.triples_tsv(), b.triples_tsv());
        assert_ne!(generate_toy(4).triples_tsv(), a.triples_tsv());
    }

    #[test]
    fn chicago_is_ambiguous() {
        let kb = generate_toy(0).kb();
        assert_eq!(kb.lookup_entities("chicago").len(), 3);
        assert_eq!(kb.lookup_entities("PHILIPPINES").len(), 3);
        assert_eq!(kb.lookup_entities("robert lamm").len(), 2);
    }
}
