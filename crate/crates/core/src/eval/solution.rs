use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::rdf::RdfTerm;

/// Partial map from variable names to terms.
pub type Solution = BTreeMap<String, RdfTerm>;

/// Ordered solutions plus the variables in scope.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolutionTable {
    pub variables: Vec<String>,
    pub solutions: Vec<Solution>,
}

impl SolutionTable {
    pub fn new(variables: Vec<String>, solutions: Vec<Solution>) -> Self {
        SolutionTable { variables, solutions }
    }

    /// The join identity: one solution binding nothing.
    pub fn unit() -> Self {
        SolutionTable {
            variables: Vec::new(),
            solutions: vec![Solution::new()],
        }
    }

    pub fn empty(variables: Vec<String>) -> Self {
        SolutionTable {
            variables,
            solutions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// Solutions as a set of canonicalized bindings, for order-insensitive
    /// comparison.
    pub fn to_set(&self) -> BTreeSet<Vec<(String, RdfTerm)>> {
        self.solutions.iter().map(canonical_key).collect()
    }

    /// Multiset of canonicalized bindings.
    pub fn to_multiset(&self) -> BTreeMap<Vec<(String, RdfTerm)>, usize> {
        let mut out = BTreeMap::new();
        for s in &self.solutions {
            *out.entry(canonical_key(s)).or_insert(0) += 1;
        }
        out
    }

    /// Restricts every solution to `vars`, which become the table's
    /// variables.
    pub fn project(self, vars: &[String]) -> SolutionTable {
        let solutions = self
            .solutions
            .into_iter()
            .map(|mut s| {
                s.retain(|k, _| vars.contains(k));
                s
            })
            .collect();
        SolutionTable {
            variables: vars.to_vec(),
            solutions,
        }
    }

    /// Removes duplicate solutions, comparing canonical lexical forms and
    /// keeping the first occurrence.
    pub fn distinct(mut self) -> SolutionTable {
        let mut seen = BTreeSet::new();
        self.solutions.retain(|s| seen.insert(canonical_key(s)));
        self
    }

    pub fn add_variables<'a>(&mut self, vars: impl IntoIterator<Item = &'a String>) {
        for v in vars {
            if !self.variables.contains(v) {
                self.variables.push(v.clone());
            }
        }
    }
}

fn canonical_key(s: &Solution) -> Vec<(String, RdfTerm)> {
    s.iter().map(|(k, v)| (k.clone(), v.canonical())).collect()
}

/// Two solutions are compatible when they agree on every shared variable.
pub fn compatible(a: &Solution, b: &Solution) -> bool {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().all(|(k, v)| large.get(k).is_none_or(|w| w == v))
}

pub fn merge(a: &Solution, b: &Solution) -> Solution {
    let mut out = a.clone();
    for (k, v) in b {
        out.entry(k.clone()).or_insert_with(|| v.clone());
    }
    out
}

/// Natural join. Hashes on the shared variables when every solution binds
/// them, and falls back to pairwise compatibility otherwise. Output order
/// follows the left table.
pub fn join(left: &SolutionTable, right: &SolutionTable) -> SolutionTable {
    let mut variables = left.variables.clone();
    for v in &right.variables {
        if !variables.contains(v) {
            variables.push(v.clone());
        }
    }
    let shared: Vec<&String> = left.variables.iter().filter(|v| right.variables.contains(v)).collect();
    let all_bound = |t: &SolutionTable| t.solutions.iter().all(|s| shared.iter().all(|v| s.contains_key(*v)));
    let mut solutions = Vec::new();
    if all_bound(left) && all_bound(right) {
        let mut index: HashMap<Vec<&RdfTerm>, Vec<&Solution>> = HashMap::new();
        for r in &right.solutions {
            index.entry(shared.iter().map(|v| &r[*v]).collect()).or_default().push(r);
        }
        for l in &left.solutions {
            let key: Vec<&RdfTerm> = shared.iter().map(|v| &l[*v]).collect();
            if let Some(matches) = index.get(&key) {
                solutions.extend(matches.iter().map(|r| merge(l, r)));
            }
        }
    } else {
        for l in &left.solutions {
            for r in &right.solutions {
                if compatible(l, r) {
                    solutions.push(merge(l, r));
                }
            }
        }
    }
    SolutionTable { variables, solutions }
}
