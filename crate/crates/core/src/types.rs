//! Simple types (atomic + arrow) and inference for [`Term`]s.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::term::Term;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TermType {
    Atomic(String),
    Arrow(Box<TermType>, Box<TermType>),
    /// Type variable produced by inference.
    Var(u32),
}

impl TermType {
    pub fn atomic(name: &str) -> TermType {
        TermType::Atomic(name.to_string())
    }

    pub fn arrow(from: TermType, to: TermType) -> TermType {
        TermType::Arrow(Box::new(from), Box::new(to))
    }

    /// `base -> base -> ... -> base` with `arity` arrows.
    pub fn chain(base: &str, arity: usize) -> TermType {
        (0..arity).fold(TermType::atomic(base), |acc, _| {
            TermType::arrow(TermType::atomic(base), acc)
        })
    }

    pub fn arity(&self) -> usize {
        match self {
            TermType::Arrow(_, to) => 1 + to.arity(),
            _ => 0,
        }
    }
}

impl fmt::Display for TermType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermType::Atomic(a) => write!(f, "{a}"),
            TermType::Var(i) => write!(f, "'t{i}"),
            TermType::Arrow(a, b) => {
                if matches!(**a, TermType::Arrow(..)) {
                    write!(f, "({a}) -> {b}")
                } else {
                    write!(f, "{a} -> {b}")
                }
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TypeError {
    #[error("type clash: cannot unify {0} with {1}")]
    TypeClash(String, String),
}

/// Constant name → type, with arity-based defaulting for unknown constants.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    types: BTreeMap<String, TermType>,
    default_atom: String,
}

impl Signature {
    pub fn new(default_atom: &str) -> Signature {
        Signature {
            types: BTreeMap::new(),
            default_atom: default_atom.to_string(),
        }
    }

    pub fn insert(&mut self, name: &str, ty: TermType) {
        self.types.insert(name.to_string(), ty);
    }

    pub fn get(&self, name: &str) -> Option<&TermType> {
        self.types.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    /// Type of `name`; unknown constants get the default atom lifted to an
    /// arrow chain of `observed_arity`.
    pub fn lookup(&self, name: &str, observed_arity: usize) -> TermType {
        match self.types.get(name) {
            Some(t) => t.clone(),
            None => TermType::chain(self.default_atom(), observed_arity),
        }
    }

    /// Whether every known constant in `t` occurs applied to exactly as
    /// many arguments as its type takes.
    pub fn saturated(&self, t: &Term) -> bool {
        let (head, args) = t.spine();
        let head_ok = match head {
            Term::Const(c) => self.types.get(c).is_none_or(|ty| ty.arity() == args.len()),
            Term::Lam(_, b) => self.saturated(b),
            Term::Var(_) => true,
            Term::App(..) => unreachable!("spine head is never an application"),
        };
        head_ok && args.into_iter().all(|a| self.saturated(a))
    }

    fn default_atom(&self) -> &str {
        if self.default_atom.is_empty() {
            "e"
        } else {
            &self.default_atom
        }
    }
}

struct Infer<'a> {
    sig: &'a Signature,
    subst: Vec<Option<TermType>>,
    arity: BTreeMap<String, usize>,
}

impl Infer<'_> {
    fn fresh(&mut self) -> TermType {
        self.subst.push(None);
        TermType::Var(self.subst.len() as u32 - 1)
    }

    fn resolve(&self, t: &TermType) -> TermType {
        match t {
            TermType::Var(i) => match &self.subst[*i as usize] {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            TermType::Arrow(a, b) => TermType::arrow(self.resolve(a), self.resolve(b)),
            TermType::Atomic(_) => t.clone(),
        }
    }

    fn occurs(&self, v: u32, t: &TermType) -> bool {
        match t {
            TermType::Var(i) => {
                *i == v
                    || match &self.subst[*i as usize] {
                        Some(b) => self.occurs(v, b),
                        None => false,
                    }
            }
            TermType::Arrow(a, b) => self.occurs(v, a) || self.occurs(v, b),
            TermType::Atomic(_) => false,
        }
    }

    fn unify(&mut self, a: &TermType, b: &TermType) -> Result<(), TypeError> {
        let a = self.shallow(a);
        let b = self.shallow(b);
        match (&a, &b) {
            (TermType::Var(i), TermType::Var(j)) if i == j => Ok(()),
            (TermType::Var(i), other) | (other, TermType::Var(i)) => {
                if self.occurs(*i, other) {
                    return Err(self.clash(&a, &b));
                }
                self.subst[*i as usize] = Some(other.clone());
                Ok(())
            }
            (TermType::Atomic(x), TermType::Atomic(y)) if x == y => Ok(()),
            (TermType::Arrow(a1, b1), TermType::Arrow(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            _ => Err(self.clash(&a, &b)),
        }
    }

    fn shallow(&self, t: &TermType) -> TermType {
        match t {
            TermType::Var(i) => match &self.subst[*i as usize] {
                Some(b) => self.shallow(b),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn clash(&self, a: &TermType, b: &TermType) -> TypeError {
        TypeError::TypeClash(self.resolve(a).to_string(), self.resolve(b).to_string())
    }

    fn infer(&mut self, t: &Term, env: &mut Vec<(String, TermType)>) -> Result<TermType, TypeError> {
        match t {
            Term::Var(v) => match env.iter().rev().find(|(n, _)| n == v) {
                Some((_, ty)) => Ok(ty.clone()),
                None => {
                    let ty = self.fresh();
                    env.insert(0, (v.clone(), ty.clone()));
                    Ok(ty)
                }
            },
            Term::Const(c) => {
                let arity = self.arity.get(c).copied().unwrap_or(0);
                Ok(self.sig.lookup(c, arity))
            }
            Term::Lam(x, b) => {
                let arg = self.fresh();
                env.push((x.clone(), arg.clone()));
                let body = self.infer(b, env);
                env.pop();
                Ok(TermType::arrow(arg, body?))
            }
            Term::App(f, a) => {
                let ft = self.infer(f, env)?;
                let at = self.infer(a, env)?;
                let rt = self.fresh();
                self.unify(&ft, &TermType::arrow(at, rt.clone()))?;
                Ok(rt)
            }
        }
    }
}

fn observed_arities(t: &Term, out: &mut BTreeMap<String, usize>) {
    if let Term::App(..) = t {
        let (head, args) = t.spine();
        if let Term::Const(c) = head {
            let e = out.entry(c.clone()).or_insert(0);
            *e = (*e).max(args.len());
        } else {
            observed_arities(head, out);
        }
        for a in args {
            observed_arities(a, out);
        }
    } else if let Term::Lam(_, b) = t {
        observed_arities(b, out);
    }
}

fn rename_vars(t: &TermType, map: &mut BTreeMap<u32, u32>) -> TermType {
    match t {
        TermType::Var(i) => {
            let n = map.len() as u32;
            TermType::Var(*map.entry(*i).or_insert(n))
        }
        TermType::Arrow(a, b) => {
            let a = rename_vars(a, map);
            TermType::arrow(a, rename_vars(b, map))
        }
        TermType::Atomic(_) => t.clone(),
    }
}

/// Simple-type inference; type variables in the result are numbered from 0
/// in order of appearance.
pub fn infer_type(t: &Term, sig: &Signature) -> Result<TermType, TypeError> {
    let mut arity = BTreeMap::new();
    observed_arities(t, &mut arity);
    let mut inf = Infer {
        sig,
        subst: Vec::new(),
        arity,
    };
    let ty = inf.infer(t, &mut Vec::new())?;
    let resolved = inf.resolve(&ty);
    Ok(rename_vars(&resolved, &mut BTreeMap::new()))
}
