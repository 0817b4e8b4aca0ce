use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use crate::field::Fe;

/// A cell reference relative to the row a constraint is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Query {
    pub column: u32,
    pub rotation: i32,
}

/// Polynomial expression tree over queried cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expression {
    Constant(Fe),
    Query(Query),
    Neg(Box<Expression>),
    Sum(Box<Expression>, Box<Expression>),
    Product(Box<Expression>, Box<Expression>),
    Scaled(Box<Expression>, Fe),
    Pow(Box<Expression>, u32),
}

impl Expression {
    pub fn query(column: u32, rotation: i32) -> Expression {
        Expression::Query(Query { column, rotation })
    }

    pub fn cur(column: u32) -> Expression {
        Expression::query(column, 0)
    }

    pub fn next(column: u32) -> Expression {
        Expression::query(column, 1)
    }

    pub fn constant(v: impl Into<Fe>) -> Expression {
        Expression::Constant(v.into())
    }

    pub fn pow(self, e: u32) -> Expression {
        Expression::Pow(Box::new(self), e)
    }

    pub fn scale(self, k: Fe) -> Expression {
        Expression::Scaled(Box::new(self), k)
    }

    pub fn degree(&self) -> u32 {
        match self {
            Expression::Constant(_) => 0,
            Expression::Query(_) => 1,
            Expression::Neg(e) | Expression::Scaled(e, _) => e.degree(),
            Expression::Sum(a, b) => a.degree().max(b.degree()),
            Expression::Product(a, b) => a.degree() + b.degree(),
            Expression::Pow(e, k) => e.degree() * k,
        }
    }

    pub fn evaluate<F: Fn(Query) -> Fe>(&self, q: &F) -> Fe {
        match self {
            Expression::Constant(c) => *c,
            Expression::Query(x) => q(*x),
            Expression::Neg(e) => -e.evaluate(q),
            Expression::Sum(a, b) => a.evaluate(q) + b.evaluate(q),
            Expression::Product(a, b) => a.evaluate(q) * b.evaluate(q),
            Expression::Scaled(e, k) => e.evaluate(q) * *k,
            Expression::Pow(e, k) => e.evaluate(q).pow_u64(*k as u64),
        }
    }

    pub fn for_each_query(&self, f: &mut impl FnMut(Query)) {
        match self {
            Expression::Constant(_) => {}
            Expression::Query(x) => f(*x),
            Expression::Neg(e) | Expression::Scaled(e, _) | Expression::Pow(e, _) => {
                e.for_each_query(f)
            }
            Expression::Sum(a, b) | Expression::Product(a, b) => {
                a.for_each_query(f);
                b.for_each_query(f);
            }
        }
    }

    pub fn queries(&self) -> Vec<Query> {
        let mut out = Vec::new();
        self.for_each_query(&mut |q| out.push(q));
        out.sort();
        out.dedup();
        out
    }

    /// Depth of the tree; used to bound decoding recursion.
    pub fn depth(&self) -> usize {
        match self {
            Expression::Constant(_) | Expression::Query(_) => 1,
            Expression::Neg(e) | Expression::Scaled(e, _) | Expression::Pow(e, _) => 1 + e.depth(),
            Expression::Sum(a, b) | Expression::Product(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Sum of terms, balanced so the tree depth stays logarithmic.
    pub fn sum_of(mut terms: Vec<Expression>) -> Expression {
        if terms.is_empty() {
            return Expression::Constant(Fe::ZERO);
        }
        while terms.len() > 1 {
            let mut next = Vec::with_capacity(terms.len().div_ceil(2));
            let mut it = terms.into_iter();
            while let Some(a) = it.next() {
                match it.next() {
                    Some(b) => next.push(a + b),
                    None => next.push(a),
                }
            }
            terms = next;
        }
        terms.pop().unwrap()
    }
}

impl Add for Expression {
    type Output = Expression;
    fn add(self, rhs: Expression) -> Expression {
        Expression::Sum(Box::new(self), Box::new(rhs))
    }
}

impl Sub for Expression {
    type Output = Expression;
    fn sub(self, rhs: Expression) -> Expression {
        Expression::Sum(Box::new(self), Box::new(Expression::Neg(Box::new(rhs))))
    }
}

impl Mul for Expression {
    type Output = Expression;
    fn mul(self, rhs: Expression) -> Expression {
        Expression::Product(Box::new(self), Box::new(rhs))
    }
}

impl Mul<Fe> for Expression {
    type Output = Expression;
    fn mul(self, rhs: Fe) -> Expression {
        Expression::Scaled(Box::new(self), rhs)
    }
}

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::Neg(Box::new(self))
    }
}

fn fmt_const(c: &Fe, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match c.to_i64() {
        Some(v) if v.unsigned_abs() < (1 << 40) => write!(f, "{v}"),
        _ => write!(f, "{c}"),
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Constant(c) => fmt_const(c, f),
            Expression::Query(q) => {
                if q.rotation == 0 {
                    write!(f, "c{}", q.column)
                } else {
                    write!(f, "c{}[{:+}]", q.column, q.rotation)
                }
            }
            Expression::Neg(e) => write!(f, "-({e})"),
            Expression::Sum(a, b) => write!(f, "({a} + {b})"),
            Expression::Product(a, b) => write!(f, "{a} * {b}"),
            Expression::Scaled(e, k) => {
                fmt_const(k, f)?;
                write!(f, " * {e}")
            }
            Expression::Pow(e, k) => write!(f, "({e})^{k}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degree_and_evaluation() {
        let x = Expression::cur(0);
        let range = x.clone()
            * (x.clone() - Expression::constant(1u64))
            * (x.clone() - Expression::constant(2u64))
            * (x - Expression::constant(3u64));
        assert_eq!(range.degree(), 4);
        let at = |v: u64| range.evaluate(&|_| Fe::from_u64(v));
        assert_eq!(at(3), Fe::ZERO);
        assert_eq!(at(5), Fe::from_u64(5 * 4 * 3 * 2));
        let p = Expression::next(1).pow(5).scale(Fe::from_u64(2));
        assert_eq!(p.degree(), 5);
        assert_eq!(p.evaluate(&|_| Fe::from_u64(2)), Fe::from_u64(64));
    }

    #[test]
    fn balanced_sum_is_shallow() {
        let terms = (0..31).map(Expression::cur).collect();
        let s = Expression::sum_of(terms);
        assert!(s.depth() <= 7);
        assert_eq!(s.queries().len(), 31);
        assert_eq!(s.evaluate(&|q| Fe::from_u64(q.column as u64)), Fe::from_u64(465));
    }
}
