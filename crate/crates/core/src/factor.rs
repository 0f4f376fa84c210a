//! Dense factor tables with per-entry argmax tracebacks.
//!
//! A factor's table is indexed with the first scope variable most significant.
//! Every entry carries a traceback: the states chosen for variables that were
//! already max-reduced out of this factor (or out of the factors it was built
//! from). All entries of one factor trace back over the same variable set.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::error::{Error, Result};
use crate::network::{Network, VarId};
use crate::space::Space;

/// A partial assignment of states to variables, kept sorted by variable id.
///
/// The derived ordering compares two assignments over the same variables
/// lexicographically by state, in variable-id order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment(Vec<(VarId, usize)>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(Vec::new())
    }

    /// Later pairs overwrite earlier ones for the same variable.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, usize)>) -> Self {
        let mut a = Assignment::new();
        for (v, s) in pairs {
            a.insert(v, s);
        }
        a
    }

    pub fn insert(&mut self, var: VarId, state: usize) {
        match self.0.binary_search_by_key(&var, |&(v, _)| v) {
            Ok(i) => self.0[i].1 = state,
            Err(i) => self.0.insert(i, (var, state)),
        }
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.0.binary_search_by_key(&var, |&(v, _)| v).ok().map(|i| self.0[i].1)
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.get(var).is_some()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    /// Union of two assignments over disjoint variables.
    pub fn merge_disjoint(&self, other: &Assignment) -> Result<Assignment> {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => return Err(Error::TracebackCollision(self.0[i].0)),
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Ok(Assignment(out))
    }

    /// Union where `other` wins on shared variables.
    pub fn overlay(&self, other: &Assignment) -> Assignment {
        let mut out = self.clone();
        for (v, s) in other.iter() {
            out.insert(v, s);
        }
        out
    }

    /// Restriction to the given variables.
    pub fn project(&self, vars: &[VarId]) -> Assignment {
        Assignment(self.0.iter().copied().filter(|(v, _)| vars.contains(v)).collect())
    }
}

impl FromIterator<(VarId, usize)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (VarId, usize)>>(iter: I) -> Self {
        Assignment::from_pairs(iter)
    }
}

fn strides(cards: &[usize]) -> Vec<usize> {
    let mut s = vec![1; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * cards[k + 1];
    }
    s
}

/// Mixed-radix counter that tracks several linear offsets as its digits move.
struct Odometer<'a> {
    cards: &'a [usize],
    digits: Vec<usize>,
}

impl<'a> Odometer<'a> {
    fn new(cards: &'a [usize]) -> Self {
        Odometer { cards, digits: vec![0; cards.len()] }
    }

    /// Advances by one, updating every offset with its per-digit stride.
    fn step<const N: usize>(&mut self, offsets: &mut [usize; N], strides: &[&[usize]; N]) {
        for k in (0..self.cards.len()).rev() {
            if self.digits[k] + 1 < self.cards[k] {
                self.digits[k] += 1;
                for (o, s) in offsets.iter_mut().zip(strides) {
                    *o += s[k];
                }
                return;
            }
            let back = self.cards[k] - 1;
            self.digits[k] = 0;
            for (o, s) in offsets.iter_mut().zip(strides) {
                *o -= s[k] * back;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    space: Space,
    scope: Vec<VarId>,
    cards: Vec<usize>,
    values: Vec<f64>,
    tb_vars: Vec<VarId>,
    tb: Vec<usize>,
    fixed: Assignment,
}

impl Factor {
    /// A table with empty tracebacks and no fixed context.
    pub fn from_table(space: Space, scope: Vec<VarId>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::InvalidPlan(String::from("scope and cardinality lists differ in length")));
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::CardinalityMismatch(*v));
            }
        }
        let len: usize = cards.iter().product();
        if values.len() != len {
            return Err(Error::InvalidPlan(String::from("table length does not match scope")));
        }
        Ok(Factor { space, scope, cards, values, tb_vars: Vec::new(), tb: Vec::new(), fixed: Assignment::new() })
    }

    /// The multiplicative identity: empty scope, value one.
    pub fn unit(space: Space) -> Self {
        Factor::scalar(space, space.one())
    }

    pub fn scalar(space: Space, value: f64) -> Self {
        Factor {
            space,
            scope: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
            tb_vars: Vec::new(),
            tb: Vec::new(),
            fixed: Assignment::new(),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn scope(&self) -> &[VarId] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn traceback_vars(&self) -> &[VarId] {
        &self.tb_vars
    }

    pub fn fixed_context(&self) -> &Assignment {
        &self.fixed
    }

    pub fn position(&self, var: VarId) -> Option<usize> {
        self.scope.iter().position(|&v| v == var)
    }

    /// Table index of the entry whose scope states are `states`.
    pub fn index_of(&self, states: &[usize]) -> usize {
        debug_assert_eq!(states.len(), self.scope.len());
        states.iter().zip(&self.cards).fold(0, |acc, (&s, &c)| acc * c + s)
    }

    /// Scope states of entry `index`.
    pub fn states_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.scope.len()];
        for k in (0..self.scope.len()).rev() {
            out[k] = index % self.cards[k];
            index /= self.cards[k];
        }
        out
    }

    /// Index of the entry matching `a` on every scope variable.
    pub fn index_of_assignment(&self, a: &Assignment) -> Option<usize> {
        let mut idx = 0;
        for (v, c) in self.scope.iter().zip(&self.cards) {
            idx = idx * c + a.get(*v)?;
        }
        Some(idx)
    }

    pub fn entry_assignment(&self, index: usize) -> Assignment {
        Assignment::from_pairs(self.scope.iter().copied().zip(self.states_of(index)))
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn traceback_states(&self, index: usize) -> &[usize] {
        let w = self.tb_vars.len();
        &self.tb[index * w..(index + 1) * w]
    }

    pub fn traceback(&self, index: usize) -> Assignment {
        Assignment(self.tb_vars.iter().copied().zip(self.traceback_states(index).iter().copied()).collect())
    }

    /// Slices every scope variable bound in `a` to its bound state. Sliced
    /// variables move to the fixed context.
    pub fn restrict(&self, a: &Assignment) -> Factor {
        let st = strides(&self.cards);
        let mut base = 0;
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        let mut keep_strides = Vec::new();
        let mut fixed = self.fixed.clone();
        for (k, &v) in self.scope.iter().enumerate() {
            match a.get(v) {
                Some(s) => {
                    base += s * st[k];
                    fixed.insert(v, s);
                }
                None => {
                    scope.push(v);
                    cards.push(self.cards[k]);
                    keep_strides.push(st[k]);
                }
            }
        }
        let len: usize = cards.iter().product();
        let w = self.tb_vars.len();
        let mut values = Vec::with_capacity(len);
        let mut tb = Vec::with_capacity(len * w);
        let mut odo = Odometer::new(&cards);
        let mut off = [base];
        for i in 0..len {
            values.push(self.values[off[0]]);
            tb.extend_from_slice(self.traceback_states(off[0]));
            if i + 1 < len {
                odo.step(&mut off, &[&keep_strides]);
            }
        }
        Factor { space: self.space, scope, cards, values, tb_vars: self.tb_vars.clone(), tb, fixed }
    }

    /// The same factor with its scope permuted to `order`.
    pub fn reorder(&self, order: &[VarId]) -> Result<Factor> {
        if order.len() != self.scope.len() {
            return Err(Error::InvalidPlan(String::from("reorder needs a permutation of the scope")));
        }
        let st = strides(&self.cards);
        let mut cards = Vec::with_capacity(order.len());
        let mut src = Vec::with_capacity(order.len());
        for &v in order {
            let k = self.position(v).ok_or(Error::NotInScope(v))?;
            cards.push(self.cards[k]);
            src.push(st[k]);
        }
        let len = self.values.len();
        let w = self.tb_vars.len();
        let mut values = Vec::with_capacity(len);
        let mut tb = Vec::with_capacity(len * w);
        let mut odo = Odometer::new(&cards);
        let mut off = [0];
        for i in 0..len {
            values.push(self.values[off[0]]);
            tb.extend_from_slice(self.traceback_states(off[0]));
            if i + 1 < len {
                odo.step(&mut off, &[&src]);
            }
        }
        Ok(Factor {
            space: self.space,
            scope: order.to_vec(),
            cards,
            values,
            tb_vars: self.tb_vars.clone(),
            tb,
            fixed: self.fixed.clone(),
        })
    }

    /// Entry-wise product over the union of both scopes.
    ///
    /// The result's scope is `self`'s scope followed by `other`'s new
    /// variables. Tracebacks of matching entries are merged, which fails if
    /// both sides already eliminated the same variable.
    pub fn conformal_product(&self, other: &Factor) -> Result<Factor> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        for &v in &self.tb_vars {
            if other.tb_vars.binary_search(&v).is_ok() || other.scope.contains(&v) {
                return Err(Error::TracebackCollision(v));
            }
        }
        for &v in &other.tb_vars {
            if self.scope.contains(&v) {
                return Err(Error::TracebackCollision(v));
            }
        }

        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        for (k, &v) in other.scope.iter().enumerate() {
            match self.position(v) {
                Some(p) if self.cards[p] != other.cards[k] => return Err(Error::CardinalityMismatch(v)),
                Some(_) => {}
                None => {
                    scope.push(v);
                    cards.push(other.cards[k]);
                }
            }
        }
        let ls = strides(&self.cards);
        let rs = strides(&other.cards);
        let left_strides: Vec<usize> = scope.iter().map(|&v| self.position(v).map_or(0, |p| ls[p])).collect();
        let right_strides: Vec<usize> = scope.iter().map(|&v| other.position(v).map_or(0, |p| rs[p])).collect();

        // Merged traceback layout, sorted by variable id.
        let mut tb_vars: Vec<VarId> = self.tb_vars.iter().chain(&other.tb_vars).copied().collect();
        tb_vars.sort_unstable();
        let tb_src: Vec<(bool, usize)> = tb_vars
            .iter()
            .map(|v| match self.tb_vars.binary_search(v) {
                Ok(k) => (true, k),
                Err(_) => (false, other.tb_vars.binary_search(v).unwrap()),
            })
            .collect();

        let len: usize = cards.iter().product();
        let mut values = Vec::with_capacity(len);
        let mut tb = Vec::with_capacity(len * tb_vars.len());
        let mut odo = Odometer::new(&cards);
        let mut off = [0, 0];
        for i in 0..len {
            let (li, ri) = (off[0], off[1]);
            values.push(self.space.mul(self.values[li], other.values[ri]));
            if !tb_vars.is_empty() {
                let (lt, rt) = (self.traceback_states(li), other.traceback_states(ri));
                tb.extend(tb_src.iter().map(|&(left, k)| if left { lt[k] } else { rt[k] }));
            }
            if i + 1 < len {
                odo.step(&mut off, &[&left_strides, &right_strides]);
            }
        }
        Ok(Factor { space: self.space, scope, cards, values, tb_vars, tb, fixed: self.fixed.overlay(&other.fixed) })
    }

    fn split_scope(&self, vars: &[VarId]) -> Result<(Vec<VarId>, Vec<usize>, Vec<usize>)> {
        for &v in vars {
            if self.position(v).is_none() {
                return Err(Error::NotInScope(v));
            }
        }
        let mut scope = Vec::new();
        let mut cards = Vec::new();
        for (k, &v) in self.scope.iter().enumerate() {
            if !vars.contains(&v) {
                scope.push(v);
                cards.push(self.cards[k]);
            }
        }
        let out_st = strides(&cards);
        // Stride into the output table for every input scope position.
        let mut out_strides = vec![0; self.scope.len()];
        let mut j = 0;
        for (k, &v) in self.scope.iter().enumerate() {
            if !vars.contains(&v) {
                out_strides[k] = out_st[j];
                j += 1;
            }
        }
        Ok((scope, cards, out_strides))
    }

    /// Maximizes `vars` out of the table.
    ///
    /// Each output entry is the best input entry over the eliminated
    /// variables. Ties (within [`crate::space::TIE_TOLERANCE`]) go to the
    /// entry whose full traceback, including the new variables, is
    /// lexicographically largest in variable-id order.
    pub fn reduce_max(&self, vars: &[VarId]) -> Result<Factor> {
        if vars.is_empty() {
            return Ok(self.clone());
        }
        let (scope, cards, out_strides) = self.split_scope(vars)?;
        let reduced_pos: Vec<usize> = (0..self.scope.len()).filter(|&k| vars.contains(&self.scope[k])).collect();

        let mut tb_vars = self.tb_vars.clone();
        for &k in &reduced_pos {
            tb_vars.push(self.scope[k]);
        }
        tb_vars.sort_unstable();
        // Where each new traceback slot comes from: an old slot or a scope digit.
        let tb_src: Vec<(bool, usize)> = tb_vars
            .iter()
            .map(|v| match self.tb_vars.binary_search(v) {
                Ok(k) => (true, k),
                Err(_) => (false, self.position(*v).unwrap()),
            })
            .collect();
        let completion = |index: usize| -> Vec<usize> {
            let digits = self.states_of(index);
            let old = self.traceback_states(index);
            tb_src.iter().map(|&(from_tb, k)| if from_tb { old[k] } else { digits[k] }).collect()
        };

        let out_len: usize = cards.iter().product();
        let mut best: Vec<usize> = vec![usize::MAX; out_len];
        let mut odo = Odometer::new(&self.cards);
        let mut off = [0];
        for i in 0..self.values.len() {
            let o = off[0];
            let b = best[o];
            if b == usize::MAX {
                best[o] = i;
            } else {
                match self.space.rank_values(self.values[i], self.values[b]) {
                    Ordering::Less => best[o] = i,
                    Ordering::Equal if completion(i) > completion(b) => best[o] = i,
                    _ => {}
                }
            }
            if i + 1 < self.values.len() {
                odo.step(&mut off, &[&out_strides]);
            }
        }

        let mut values = Vec::with_capacity(out_len);
        let mut tb = Vec::with_capacity(out_len * tb_vars.len());
        for &b in &best {
            values.push(self.values[b]);
            tb.extend(completion(b));
        }
        Ok(Factor { space: self.space, scope, cards, values, tb_vars, tb, fixed: self.fixed.clone() })
    }

    /// Sums `vars` out of the table. All entries folded into one output entry
    /// must carry the same traceback.
    pub fn sum_out(&self, vars: &[VarId]) -> Result<Factor> {
        if vars.is_empty() {
            return Ok(self.clone());
        }
        let (scope, cards, out_strides) = self.split_scope(vars)?;
        let out_len: usize = cards.iter().product();
        let w = self.tb_vars.len();
        let mut values = vec![self.space.zero(); out_len];
        let mut first: Vec<usize> = vec![usize::MAX; out_len];
        let mut odo = Odometer::new(&self.cards);
        let mut off = [0];
        for i in 0..self.values.len() {
            let o = off[0];
            values[o] = self.space.add(values[o], self.values[i]);
            if first[o] == usize::MAX {
                first[o] = i;
            } else if w > 0 && self.traceback_states(i) != self.traceback_states(first[o]) {
                return Err(Error::TracebackDivergence(vars[0]));
            }
            if i + 1 < self.values.len() {
                odo.step(&mut off, &[&out_strides]);
            }
        }
        let mut tb = Vec::with_capacity(out_len * w);
        for &f in &first {
            tb.extend_from_slice(self.traceback_states(f));
        }
        Ok(Factor {
            space: self.space,
            scope,
            cards,
            values,
            tb_vars: self.tb_vars.clone(),
            tb,
            fixed: self.fixed.clone(),
        })
    }

    /// Text dump with one line per entry, e.g. `d(d=0) = 0.7000 with f=1`.
    pub fn display<'a>(&'a self, net: &'a Network) -> FactorDisplay<'a> {
        FactorDisplay { factor: self, net }
    }
}

pub struct FactorDisplay<'a> {
    factor: &'a Factor,
    net: &'a Network,
}

impl fmt::Display for FactorDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fac = self.factor;
        let label = |v: VarId, s: usize| (&self.net.variable(v).name, &self.net.variable(v).states[s]);
        for i in 0..fac.len() {
            write!(f, "d(")?;
            for (k, (&v, s)) in fac.scope.iter().zip(fac.states_of(i)).enumerate() {
                let (n, l) = label(v, s);
                if k > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{n}={l}")?;
            }
            write!(f, ") = {:.4}", fac.space.to_prob(fac.values[i]))?;
            if !fac.tb_vars.is_empty() {
                write!(f, " with")?;
                for (v, s) in fac.traceback(i).iter() {
                    let (n, l) = label(v, s);
                    write!(f, " {n}={l}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
