//! A small geography database and a set-valued evaluator for funql queries
//! over it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    State(String),
    River(String),
    City(String),
    Lake(String),
    Place(String),
    Country(String),
    Number(u64),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::State(s) => write!(f, "state:{s}"),
            Entity::River(s) => write!(f, "river:{s}"),
            Entity::City(s) => write!(f, "city:{s}"),
            Entity::Lake(s) => write!(f, "lake:{s}"),
            Entity::Place(s) => write!(f, "place:{s}"),
            Entity::Country(s) => write!(f, "country:{s}"),
            Entity::Number(n) => write!(f, "{n}"),
        }
    }
}

pub type Answer = BTreeSet<Entity>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum GeoError {
    #[error("unsupported predicate {0:?}")]
    UnsupportedPredicate(String),
    #[error("wrong number of arguments for {0:?}")]
    Arity(String),
    #[error("not a ground query: {0}")]
    NotGround(String),
}

#[derive(Clone, Debug, Default)]
pub struct GeoDatabase {
    /// name → population
    pub states: BTreeMap<String, u64>,
    /// name → states traversed
    pub rivers: BTreeMap<String, Vec<String>>,
    /// name → (state, population)
    pub cities: BTreeMap<String, (String, u64)>,
    /// name → state
    pub lakes: BTreeMap<String, String>,
    /// name → (state if any, elevation)
    pub places: BTreeMap<String, (Option<String>, u64)>,
    /// symmetric
    pub borders: BTreeSet<(String, String)>,
}

impl GeoDatabase {
    /// The bundled toy database.
    pub fn toy() -> GeoDatabase {
        let mut db = GeoDatabase::default();
        for (s, p) in [
            ("arkansas", 2_900_000),
            ("virginia", 8_500_000),
            ("texas", 29_000_000),
            ("ohio", 11_700_000),
            ("utah", 3_200_000),
            ("iowa", 3_100_000),
            ("maine", 1_300_000),
            ("oregon", 4_200_000),
            ("new york", 19_500_000),
            ("mississippi", 2_950_000),
        ] {
            db.states.insert(s.into(), p);
        }
        for (r, ss) in [
            ("mississippi", &["mississippi", "arkansas", "iowa"][..]),
            ("arkansas", &["arkansas", "texas"]),
            ("ohio", &["ohio", "virginia"]),
            ("red", &["texas", "arkansas"]),
            ("colorado", &["utah", "texas"]),
            ("hudson", &["new york"]),
            ("columbia", &["oregon"]),
            ("potomac", &["virginia"]),
        ] {
            db.rivers.insert(r.into(), ss.iter().map(|s| s.to_string()).collect());
        }
        for (c, s, p) in [
            ("little rock", "arkansas", 200_000),
            ("richmond", "virginia", 230_000),
            ("austin", "texas", 960_000),
            ("houston", "texas", 2_300_000),
            ("columbus", "ohio", 900_000),
            ("salt lake city", "utah", 200_500),
            ("portland", "oregon", 650_000),
            ("albany", "new york", 99_000),
        ] {
            db.cities.insert(c.into(), (s.into(), p));
        }
        for (l, s) in [("great salt lake", "utah"), ("erie", "ohio"), ("champlain", "new york")] {
            db.lakes.insert(l.into(), s.into());
        }
        for (p, s, e) in [
            ("mount mckinley", None, 6194),
            ("mount hood", Some("oregon"), 3429),
            ("kings peak", Some("utah"), 4123),
        ] {
            db.places.insert(p.into(), (s.map(str::to_string), e));
        }
        for (a, b) in [
            ("arkansas", "texas"),
            ("arkansas", "mississippi"),
            ("virginia", "ohio"),
            ("ohio", "iowa"),
            ("ohio", "new york"),
            ("oregon", "iowa"),
        ] {
            db.add_border(a, b);
        }
        db
    }

    pub fn add_border(&mut self, a: &str, b: &str) {
        self.borders.insert((a.into(), b.into()));
        self.borders.insert((b.into(), a.into()));
    }

    fn universe(&self) -> Answer {
        let mut all = Answer::new();
        all.extend(self.states.keys().cloned().map(Entity::State));
        all.extend(self.rivers.keys().cloned().map(Entity::River));
        all.extend(self.cities.keys().cloned().map(Entity::City));
        all.extend(self.lakes.keys().cloned().map(Entity::Lake));
        all.extend(self.places.keys().cloned().map(Entity::Place));
        all.insert(Entity::Country("usa".into()));
        all
    }

    /// Entities located in `e`.
    fn located_in(&self, e: &Entity) -> Answer {
        let mut out = Answer::new();
        match e {
            Entity::State(s) => {
                for (r, ss) in &self.rivers {
                    if ss.contains(s) {
                        out.insert(Entity::River(r.clone()));
                    }
                }
                for (c, (cs, _)) in &self.cities {
                    if cs == s {
                        out.insert(Entity::City(c.clone()));
                    }
                }
                for (l, ls) in &self.lakes {
                    if ls == s {
                        out.insert(Entity::Lake(l.clone()));
                    }
                }
                for (p, (ps, _)) in &self.places {
                    if ps.as_ref() == Some(s) {
                        out.insert(Entity::Place(p.clone()));
                    }
                }
            }
            // a river's "location" is the states it runs through
            Entity::River(r) => {
                if let Some(ss) = self.rivers.get(r) {
                    out.extend(ss.iter().cloned().map(Entity::State));
                }
            }
            Entity::Country(c) if c == "usa" => {
                out = self.universe();
                out.remove(e);
            }
            _ => {}
        }
        out
    }

    fn neighbours(&self, e: &Entity) -> Answer {
        match e {
            Entity::State(s) => self
                .borders
                .iter()
                .filter(|(a, _)| a == s)
                .map(|(_, b)| Entity::State(b.clone()))
                .collect(),
            _ => Answer::new(),
        }
    }
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('\'').and_then(|x| x.strip_suffix('\'')).unwrap_or(s)
}

/// Evaluates a ground funql query to its answer set.
pub fn eval_funql(t: &Term, db: &GeoDatabase) -> Result<Answer, GeoError> {
    let (head, args) = t.spine();
    let name = match head {
        Term::Const(c) => c.as_str(),
        _ => return Err(GeoError::NotGround(crate::term::render_term(t))),
    };
    let want = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(GeoError::Arity(name.to_string()))
        }
    };
    let literal = || -> Result<String, GeoError> {
        want(1)?;
        match args[0] {
            Term::Const(c) => Ok(unquote(c).to_string()),
            _ => Err(GeoError::NotGround(crate::term::render_term(t))),
        }
    };
    let filter = |keep: &dyn Fn(&Entity) -> bool| -> Result<Answer, GeoError> {
        want(1)?;
        Ok(eval_funql(args[0], db)?.into_iter().filter(|e| keep(e)).collect())
    };
    match name {
        "answer" => {
            want(1)?;
            eval_funql(args[0], db)
        }
        "all" => {
            want(0)?;
            Ok(db.universe())
        }
        "stateid" => Ok(Answer::from([Entity::State(literal()?)])),
        "riverid" => Ok(Answer::from([Entity::River(literal()?)])),
        "cityid" => Ok(Answer::from([Entity::City(literal()?)])),
        "placeid" => Ok(Answer::from([Entity::Place(literal()?)])),
        "countryid" => Ok(Answer::from([Entity::Country(literal()?)])),
        "state" => filter(&|e| matches!(e, Entity::State(_))),
        "river" => filter(&|e| matches!(e, Entity::River(_))),
        "city" => filter(&|e| matches!(e, Entity::City(_))),
        "lake" => filter(&|e| matches!(e, Entity::Lake(_))),
        "place" => filter(&|e| matches!(e, Entity::Place(_))),
        "loc_2" => {
            want(1)?;
            Ok(eval_funql(args[0], db)?.iter().flat_map(|e| db.located_in(e)).collect())
        }
        "next_to_2" => {
            want(1)?;
            Ok(eval_funql(args[0], db)?.iter().flat_map(|e| db.neighbours(e)).collect())
        }
        "exclude" => {
            want(2)?;
            let a = eval_funql(args[0], db)?;
            let b = eval_funql(args[1], db)?;
            Ok(a.difference(&b).cloned().collect())
        }
        "population_1" => {
            want(1)?;
            Ok(eval_funql(args[0], db)?
                .iter()
                .filter_map(|e| match e {
                    Entity::State(s) => db.states.get(s).copied(),
                    Entity::City(c) => db.cities.get(c).map(|x| x.1),
                    _ => None,
                })
                .map(Entity::Number)
                .collect())
        }
        "elevation_1" => {
            want(1)?;
            Ok(eval_funql(args[0], db)?
                .iter()
                .filter_map(|e| match e {
                    Entity::Place(p) => db.places.get(p).map(|x| x.1),
                    _ => None,
                })
                .map(Entity::Number)
                .collect())
        }
        other => Err(GeoError::UnsupportedPredicate(other.to_string())),
    }
}
