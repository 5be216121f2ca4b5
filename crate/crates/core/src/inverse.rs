//! Inverse λ operators: recover the unknown operand of an application from
//! the result and the known operand.
//!
//! * [`inverse_r`] solves `known @ F ≡ result` (the unknown is the argument).
//! * [`inverse_l`] solves `F @ known ≡ result` (the unknown is the function).
//!
//! Each operator tries its cases in a fixed order and every candidate is
//! checked by recomposition before it is returned, so a non-`None` answer
//! always satisfies the defining equation.

use std::collections::BTreeSet;

use crate::term::{beta_normalize, fresh_name, replace, subterms, LambdaError, Term, DEFAULT_STEP_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// Unknown is the function: `F @ known`.
    Left,
    /// Unknown is the argument: `known @ F`.
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InverseProblem {
    pub result: Term,
    pub known: Term,
    pub direction: Direction,
}

/// `None` is the null solution.
pub type InverseSolution = Option<Term>;

impl InverseProblem {
    pub fn new(result: Term, known: Term, direction: Direction) -> Self {
        InverseProblem {
            result,
            known,
            direction,
        }
    }

    pub fn solve(&self) -> Result<InverseSolution, LambdaError> {
        match self.direction {
            Direction::Left => inverse_l(&self.result, &self.known),
            Direction::Right => inverse_r(&self.result, &self.known),
        }
    }
}

/// Checks the recomposition of a solution against the problem's result.
pub fn verify(problem: &InverseProblem, solution: &Term) -> Result<bool, LambdaError> {
    let composed = match problem.direction {
        Direction::Left => Term::app(solution.clone(), problem.known.clone()),
        Direction::Right => Term::app(problem.known.clone(), solution.clone()),
    };
    let lhs = beta_normalize(&composed, DEFAULT_STEP_LIMIT)?;
    let rhs = beta_normalize(&problem.result, DEFAULT_STEP_LIMIT)?;
    Ok(lhs.alpha_eq(&rhs))
}

struct Solver {
    depth: usize,
}

const MAX_DELEGATION: usize = 8;

/// Solves `g @ F ≡ h` for `F`.
pub fn inverse_r(h: &Term, g: &Term) -> Result<InverseSolution, LambdaError> {
    Solver { depth: 0 }.right(h, g)
}

/// Solves `F @ g ≡ h` for `F`.
pub fn inverse_l(h: &Term, g: &Term) -> Result<InverseSolution, LambdaError> {
    Solver { depth: 0 }.left(h, g)
}

/// Subterms ordered largest first; ties keep pre-order.
fn by_size_desc(t: &Term) -> Vec<&Term> {
    let mut subs = subterms(t);
    subs.sort_by_key(|s| std::cmp::Reverse(s.size()));
    subs
}

impl Solver {
    fn accept(&self, h: &Term, known: &Term, dir: Direction, candidate: Term) -> Result<Option<Term>, LambdaError> {
        if !candidate.is_closed() {
            return Ok(None);
        }
        let problem = InverseProblem::new(h.clone(), known.clone(), dir);
        match verify(&problem, &candidate) {
            Ok(true) => Ok(Some(candidate.canonical())),
            Ok(false) | Err(LambdaError::NonTerminating(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn right(&mut self, h: &Term, g: &Term) -> Result<InverseSolution, LambdaError> {
        let h = beta_normalize(h, DEFAULT_STEP_LIMIT)?.canonical();
        let g = beta_normalize(g, DEFAULT_STEP_LIMIT)?.canonical();
        let Term::Lam(v, body) = &g else {
            return Ok(None);
        };

        // case 1: G = \v. v @ J  ⇒  F @ J = H
        if let Term::App(f, j) = body.as_ref() {
            if matches!(f.as_ref(), Term::Var(x) if x == v) && !j.occurs_free(v) && self.depth < MAX_DELEGATION {
                self.depth += 1;
                let sol = self.left(&h, j)?;
                self.depth -= 1;
                if let Some(f) = sol {
                    if let Some(ok) = self.accept(&h, &g, Direction::Right, f)? {
                        return Ok(Some(ok));
                    }
                }
            }
        }

        if !body.occurs_free(v) {
            return Ok(None);
        }

        // case 2: G = \v. H(J:v)  ⇒  F = J
        let metas = [v.clone()];
        if let Some(binding) = match_pattern(body, &h, &metas) {
            if let Some(j) = binding.into_iter().next().flatten() {
                if let Some(ok) = self.accept(&h, &g, Direction::Right, j)? {
                    return Ok(Some(ok));
                }
            }
        }

        // case 3: v is applied inside G, G = \w. H(J(J1..Jm) : w @ Jp .. @ Jq).
        // Find the arguments at the first head occurrence of v and abstract
        // them out of each subterm of H.
        if let Some(args) = head_occurrence_args(body, v) {
            if args.iter().all(|a| a.free_vars().iter().all(|x| x != v)) {
                for s in by_size_desc(&h) {
                    let mut avoid: BTreeSet<String> = h.names();
                    avoid.extend(g.names());
                    let vars: Vec<String> = (0..args.len())
                        .map(|i| {
                            let n = fresh_name(&format!("p{i}"), &avoid);
                            avoid.insert(n.clone());
                            n
                        })
                        .collect();
                    let var_terms: Vec<Term> = vars.iter().map(|n| Term::var(n.clone())).collect();
                    let abstracted = replace(s, &args, &var_terms)?;
                    if abstracted.alpha_eq(s) && !args.is_empty() {
                        continue;
                    }
                    let cand = vars.iter().rev().fold(abstracted, |acc, n| Term::lam(n.clone(), acc));
                    if let Some(ok) = self.accept(&h, &g, Direction::Right, cand)? {
                        return Ok(Some(ok));
                    }
                }
            }
        }
        Ok(None)
    }

    fn left(&mut self, h: &Term, g: &Term) -> Result<InverseSolution, LambdaError> {
        let h = beta_normalize(h, DEFAULT_STEP_LIMIT)?.canonical();
        let g = beta_normalize(g, DEFAULT_STEP_LIMIT)?.canonical();

        // case 1 (mirror): G = \v. J @ v  ⇒  delegate to inverse_r(H, J)
        if let Term::Lam(v, body) = &g {
            if let Term::App(j, x) = body.as_ref() {
                if matches!(x.as_ref(), Term::Var(n) if n == v) && !j.occurs_free(v) && self.depth < MAX_DELEGATION {
                    self.depth += 1;
                    let sol = self.right(&h, j)?;
                    self.depth -= 1;
                    if let Some(f) = sol {
                        if let Some(ok) = self.accept(&h, &g, Direction::Left, f)? {
                            return Ok(Some(ok));
                        }
                    }
                }
            }
        }

        let mut avoid = h.names();
        avoid.extend(g.names());
        let fresh = fresh_name("v", &avoid);

        // case 2: G is a subterm of H  ⇒  F = \v. H(G:v)
        if subterms(&h).iter().any(|s| s.alpha_eq(&g)) {
            let body = replace(&h, std::slice::from_ref(&g), &[Term::var(fresh.clone())])?;
            let cand = Term::lam(fresh.clone(), body);
            if let Some(ok) = self.accept(&h, &g, Direction::Left, cand)? {
                return Ok(Some(ok));
            }
        }

        // case 3: G = \x1..xk. B and some subterm S of H is B[Z1..Zk / x1..xk]
        //   ⇒  F = \v. H(S : v @ Z1 @ .. @ Zk)
        let mut binders = Vec::new();
        let mut body = &g;
        while let Term::Lam(x, b) = body {
            binders.push(x.clone());
            body = b;
        }
        if !binders.is_empty() {
            for s in by_size_desc(&h) {
                let Some(binding) = match_pattern(body, s, &binders) else {
                    continue;
                };
                let Some(zs) = binding.into_iter().collect::<Option<Vec<Term>>>() else {
                    continue;
                };
                let applied = zs.into_iter().fold(Term::var(fresh.clone()), Term::app);
                let replaced = replace(&h, std::slice::from_ref(s), &[applied])?;
                let cand = Term::lam(fresh.clone(), replaced);
                if let Some(ok) = self.accept(&h, &g, Direction::Left, cand)? {
                    return Ok(Some(ok));
                }
            }
        }
        Ok(None)
    }
}

/// Arguments of the first occurrence of `v` in head position (`v @ a1 .. @ ak`).
fn head_occurrence_args(t: &Term, v: &str) -> Option<Vec<Term>> {
    for s in subterms(t) {
        if let Term::App(..) = s {
            let (head, args) = s.spine();
            if matches!(head, Term::Var(x) if x == v) {
                return Some(args.into_iter().cloned().collect());
            }
        }
    }
    None
}

/// First-order matching of `pattern` against `target`, treating the free
/// variables named in `metas` as pattern variables. Returns one binding per
/// meta (`None` if that meta does not occur). Bindings never mention
/// variables bound inside the matched region.
pub fn match_pattern(pattern: &Term, target: &Term, metas: &[String]) -> Option<Vec<Option<Term>>> {
    let mut bindings = vec![None; metas.len()];
    let mut env = Vec::new();
    if match_rec(pattern, target, metas, &mut bindings, &mut env) {
        Some(bindings)
    } else {
        None
    }
}

fn match_rec(
    p: &Term,
    t: &Term,
    metas: &[String],
    bindings: &mut Vec<Option<Term>>,
    env: &mut Vec<(String, String)>,
) -> bool {
    match p {
        Term::Var(x) => {
            if let Some((_, tv)) = env.iter().rev().find(|(pv, _)| pv == x) {
                return matches!(t, Term::Var(y) if y == tv);
            }
            if let Some(i) = metas.iter().position(|m| m == x) {
                let fv = t.free_vars();
                if env.iter().any(|(_, tv)| fv.contains(tv)) {
                    return false;
                }
                return match &bindings[i] {
                    Some(prev) => prev.alpha_eq(t),
                    None => {
                        bindings[i] = Some(t.clone());
                        true
                    }
                };
            }
            match t {
                Term::Var(y) => y == x && !env.iter().any(|(_, tv)| tv == y),
                _ => false,
            }
        }
        Term::Const(c) => matches!(t, Term::Const(d) if c == d),
        Term::Lam(x, pb) => match t {
            Term::Lam(y, tb) => {
                env.push((x.clone(), y.clone()));
                let ok = match_rec(pb, tb, metas, bindings, env);
                env.pop();
                ok
            }
            _ => false,
        },
        Term::App(pf, pa) => match t {
            Term::App(tf, ta) => match_rec(pf, tf, metas, bindings, env) && match_rec(pa, ta, metas, bindings, env),
            _ => false,
        },
    }
}
