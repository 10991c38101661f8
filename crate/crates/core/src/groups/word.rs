use std::fmt;
use std::str::FromStr;

use super::{AffineElement, GroupError, MeasuredGroup};

/// A product of generator powers, written `a^-5 b a^2`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Word {
    pub letters: Vec<(String, i64)>,
}

impl Word {
    pub fn new(letters: Vec<(String, i64)>) -> Self {
        Word { letters }
    }

    pub fn single(label: &str, exp: i64) -> Self {
        Word {
            letters: vec![(label.to_string(), exp)],
        }
    }

    pub fn is_empty(&self) -> bool {
        self.letters.iter().all(|(_, e)| *e == 0)
    }

    /// Evaluates the word under the composition law; an empty word is the
    /// identity.
    pub fn evaluate(&self, g: &MeasuredGroup) -> Result<AffineElement, GroupError> {
        let mut acc = g.identity();
        for (label, exp) in &self.letters {
            let gen = g
                .generator(label)
                .ok_or_else(|| GroupError::UnknownLabel(label.clone()))?;
            acc = acc.mul(&gen.element.pow(*exp))?;
        }
        Ok(acc)
    }
}

impl FromStr for Word {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |position: usize| GroupError::MalformedWord {
            word: s.to_string(),
            position,
        };
        let mut letters = Vec::new();
        let mut rest = s;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            let offset = s.len() - rest.len() + start;
            let token = &rest[start..];
            let token = &token[..token.find(char::is_whitespace).unwrap_or(token.len())];
            rest = &rest[start + token.len()..];
            let (label, exp) = match token.split_once('^') {
                Some((l, e)) => (l, e.parse::<i64>().map_err(|_| bad(offset + l.len() + 1))?),
                None => (token, 1),
            };
            if label.is_empty() {
                return Err(bad(offset));
            }
            if let Some(i) = label.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')) {
                return Err(bad(offset + i));
            }
            letters.push((label.to_string(), exp));
        }
        Ok(Word { letters })
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, exp) in &self.letters {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            if *exp == 1 {
                write!(f, "{label}")?;
            } else {
                write!(f, "{label}^{exp}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::bs12;

    #[test]
    fn parse_and_evaluate() {
        let g = bs12();
        let w: Word = "a^-5".parse().unwrap();
        assert_eq!(w.letters, vec![("a".to_string(), -5)]);
        let x = w.evaluate(&g).unwrap();
        assert_eq!(x, g.generator("a").unwrap().element.pow(-5));
        let w: Word = "a b a^-1".parse().unwrap();
        assert_eq!(w.to_string(), "a b a^-1");
        // a b a^-1 = (2, 1).
        assert_eq!(w.evaluate(&g).unwrap().to_string(), "(2; 1)");
        assert!(Word::default().evaluate(&g).unwrap().is_identity());
    }

    #[test]
    fn malformed_words() {
        for bad in ["a^", "a^x", "^2", "a^-", "(a)"] {
            assert!(
                matches!(bad.parse::<Word>(), Err(GroupError::MalformedWord { .. })),
                "{bad}"
            );
        }
        let at = |w: &str| match w.parse::<Word>() {
            Err(GroupError::MalformedWord { position, .. }) => position,
            other => panic!("{other:?}"),
        };
        assert_eq!(at("a b^x"), 4);
        assert_eq!(at("  a ^2"), 4);
        assert_eq!(at("a b$"), 3);
        let w: Word = "q".parse().unwrap();
        assert!(matches!(
            w.evaluate(&bs12()),
            Err(GroupError::UnknownLabel(_))
        ));
    }
}
