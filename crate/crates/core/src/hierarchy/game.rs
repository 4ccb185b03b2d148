use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantified input of round `k` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Token {
    /// Existential control `u_k`.
    E(usize),
    /// Universal disturbance `w_k`.
    A(usize),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::E(k) => write!(f, "E{k}"),
            Token::A(k) => write!(f, "A{k}"),
        }
    }
}

/// Order-preserving interleaving of `E1..EH` and `A1..AH`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GameString {
    tokens: Vec<Token>,
}

impl GameString {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        if tokens.len() % 2 != 0 {
            return Err(Error::Invalid("a game string has as many E as A tokens".into()));
        }
        let h = tokens.len() / 2;
        let (mut next_e, mut next_a) = (1, 1);
        for t in &tokens {
            match *t {
                Token::E(k) if k == next_e && k <= h => next_e += 1,
                Token::A(k) if k == next_a && k <= h => next_a += 1,
                _ => {
                    return Err(Error::Invalid(format!(
                        "token {t} breaks the order E1..E{h} / A1..A{h}"
                    )))
                }
            }
        }
        if h == 0 {
            return Err(Error::Invalid("empty game string".into()));
        }
        Ok(Self { tokens })
    }

    /// `E1 A1 ... AH E2 ... EH`: the first control fixed blind, the rest
    /// chosen after every disturbance is known.
    pub fn initial(h: usize) -> Self {
        let mut tokens = vec![Token::E(1)];
        tokens.extend((1..=h).map(Token::A));
        tokens.extend((2..=h).map(Token::E));
        Self { tokens }
    }

    /// `E1 A1 E2 A2 ...`.
    pub fn alternating(h: usize) -> Self {
        Self {
            tokens: (1..=h).flat_map(|k| [Token::E(k), Token::A(k)]).collect(),
        }
    }

    /// `E1 .. EH A1 .. AH`.
    pub fn dominant(h: usize) -> Self {
        Self {
            tokens: (1..=h).map(Token::E).chain((1..=h).map(Token::A)).collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.tokens.len() / 2
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn position(&self, t: Token) -> usize {
        self.tokens.iter().position(|x| *x == t).expect("valid game string holds every token")
    }

    /// Every control precedes the disturbance of its round.
    pub fn is_causal(&self) -> bool {
        (1..=self.horizon()).all(|k| self.position(Token::E(k)) < self.position(Token::A(k)))
    }

    /// Moves `E(k+1)` immediately after `E(k)`.
    pub fn extend(&self, k: usize) -> Result<Self> {
        let h = self.horizon();
        if k == 0 || k >= h {
            return Err(Error::Invalid(format!("cannot extend round {k} of {h}")));
        }
        let mut tokens = self.tokens.clone();
        let from = self.position(Token::E(k + 1));
        let t = tokens.remove(from);
        let at = tokens.iter().position(|x| *x == Token::E(k)).unwrap() + 1;
        tokens.insert(at, t);
        Ok(Self { tokens })
    }

    /// Moves every `A(j)`, `j < k`, that follows `E(k)` to just before it,
    /// keeping their relative order.
    pub fn reveal(&self, k: usize) -> Result<Self> {
        let h = self.horizon();
        if k == 0 || k > h {
            return Err(Error::Invalid(format!("cannot reveal before round {k} of {h}")));
        }
        let pe = self.position(Token::E(k));
        let (moved, rest): (Vec<(usize, Token)>, Vec<(usize, Token)>) = self
            .tokens
            .iter()
            .copied()
            .enumerate()
            .partition(|(i, t)| *i > pe && matches!(t, Token::A(j) if *j < k));
        let mut tokens: Vec<Token> = Vec::with_capacity(self.tokens.len());
        for (_, t) in rest {
            if t == Token::E(k) {
                tokens.extend(moved.iter().map(|(_, m)| *m));
            }
            tokens.push(t);
        }
        Ok(Self { tokens })
    }

    /// Maximal runs of equal quantifiers.
    pub fn blocks(&self) -> Vec<Vec<Token>> {
        let mut out: Vec<Vec<Token>> = Vec::new();
        for t in &self.tokens {
            match out.last_mut() {
                Some(b) if std::mem::discriminant(&b[0]) == std::mem::discriminant(t) => b.push(*t),
                _ => out.push(vec![*t]),
            }
        }
        out
    }
}

impl fmt::Display for GameString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tokens.iter().map(Token::to_string).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for GameString {
    type Err = Error;

    /// Whitespace-separated tokens such as `E1 A1 A2 E2`.
    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        for word in s.split_whitespace() {
            let (head, num) = word.split_at(1);
            let k: usize = num
                .parse()
                .map_err(|_| Error::Invalid(format!("bad game token `{word}`")))?;
            tokens.push(match head {
                "E" | "e" => Token::E(k),
                "A" | "a" => Token::A(k),
                _ => return Err(Error::Invalid(format!("bad game token `{word}`"))),
            });
        }
        Self::new(tokens)
    }
}

impl TryFrom<String> for GameString {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GameString> for String {
    fn from(g: GameString) -> Self {
        g.to_string()
    }
}

/// Node of the game transition system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameNode {
    Game { decision: usize, game: GameString },
    /// No causal strategy along this path.
    Bottom,
    /// A causal game was won.
    Causal,
}

impl GameNode {
    pub fn initial(h: usize) -> Self {
        GameNode::Game {
            decision: 1,
            game: GameString::initial(h),
        }
    }

    pub fn is_terminal(&self) -> bool {
        !matches!(self, GameNode::Game { .. })
    }

    /// Controls still to be decided after the current one.
    pub fn alpha(&self) -> usize {
        match self {
            GameNode::Game { decision, game } => {
                let p = game.position(Token::E(*decision));
                let count = game.tokens()[p..].iter().filter(|t| matches!(t, Token::E(_))).count();
                count - 1
            }
            _ => 0,
        }
    }

    /// Successor along an edge labelled with the truth value of the game.
    pub fn next(&self, label: bool) -> Result<GameNode> {
        let GameNode::Game { decision: k, game: q } = self else {
            return Err(Error::NoEdge("terminal node has no successor".into()));
        };
        let k = *k;
        if label {
            if q.is_causal() {
                return Ok(GameNode::Causal);
            }
            return Ok(GameNode::Game {
                decision: k + 1,
                game: q.extend(k)?,
            });
        }
        if k == 1 {
            return Ok(GameNode::Bottom);
        }
        let pu = q.position(Token::E(k));
        let pw = q.position(Token::A(k - 1));
        if pw + 1 == pu {
            Ok(GameNode::Bottom)
        } else if pw > pu {
            Ok(GameNode::Game {
                decision: k,
                game: q.reveal(k)?,
            })
        } else {
            Err(Error::NoEdge(format!(
                "A{} sits before E{k} but not next to it in `{q}`",
                k - 1
            )))
        }
    }
}

impl fmt::Display for GameNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameNode::Game { decision, game } => write!(f, "(u{decision}, {game})"),
            GameNode::Bottom => write!(f, "bottom"),
            GameNode::Causal => write!(f, "causal"),
        }
    }
}

/// One edge taken during a walk.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStep {
    pub from: GameNode,
    pub label: bool,
    pub to: GameNode,
}

/// Checks a completed walk: at most `2H` edges, non-increasing `alpha`, and
/// two consecutive `false` labels only when the second enters the bottom node.
pub fn traversal_length_check(walk: &[WalkStep], h: usize) -> bool {
    if walk.len() > 2 * h {
        return false;
    }
    for (i, s) in walk.iter().enumerate() {
        if s.to.alpha() > s.from.alpha() {
            return false;
        }
        if i > 0 && walk[i - 1].to != s.from {
            return false;
        }
        if i > 0 && !walk[i - 1].label && !s.label && s.to != GameNode::Bottom {
            return false;
        }
    }
    walk.last().is_none_or(|s| s.to.is_terminal())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GameString {
        s.parse().unwrap()
    }

    #[test]
    fn causality() {
        assert!(g("E1 A1 E2 A2").is_causal());
        assert!(!g("A1 E1 E2 A2").is_causal());
        assert!(g("E1 A1 A2 E2").is_causal() == false);
        assert!(g("E1 A1 E2 A2").is_causal());
    }

    #[test]
    fn rejects_disorder() {
        assert!("E2 E1 A1 A2".parse::<GameString>().is_err());
        assert!("E1 A1 A1 E2".parse::<GameString>().is_err());
        assert!("E1 A1 E2".parse::<GameString>().is_err());
    }

    #[test]
    fn extend_examples() {
        assert_eq!(g("E1 A1 A2 E2").extend(1).unwrap(), g("E1 E2 A1 A2"));
        assert_eq!(g("E1 E2 A1 A2").extend(1).unwrap(), g("E1 E2 A1 A2"));
        assert_eq!(g("E1 A1 E2 A2 E3 A3").extend(2).unwrap(), g("E1 A1 E2 E3 A2 A3"));
        assert!(g("E1 A1").extend(1).is_err());
    }

    #[test]
    fn reveal_examples() {
        assert_eq!(g("E1 A1 A2 E2").reveal(2).unwrap(), g("E1 A1 A2 E2"));
        assert_eq!(g("E1 E2 A1 A2").reveal(2).unwrap(), g("E1 A1 E2 A2"));
        assert_eq!(g("E1 E2 E3 A1 A2 A3").reveal(3).unwrap(), g("E1 E2 A1 A2 E3 A3"));
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(GameNode::initial(3).alpha(), 2);
        assert_eq!(GameNode::Bottom.alpha(), 0);
        let last = GameNode::Game {
            decision: 3,
            game: g("E1 A1 E2 A2 E3 A3"),
        };
        assert_eq!(last.alpha(), 0);
    }

    #[test]
    fn edges() {
        let a0 = GameNode::initial(2);
        let b = a0.next(true).unwrap();
        assert_eq!(
            b,
            GameNode::Game {
                decision: 2,
                game: g("E1 E2 A1 A2")
            }
        );
        let c = b.next(false).unwrap();
        assert_eq!(
            c,
            GameNode::Game {
                decision: 2,
                game: g("E1 A1 E2 A2")
            }
        );
        assert_eq!(c.next(false).unwrap(), GameNode::Bottom);
        assert_eq!(c.next(true).unwrap(), GameNode::Causal);
        assert_eq!(a0.next(false).unwrap(), GameNode::Bottom);
        assert!(GameNode::Causal.next(true).is_err());
    }

    #[test]
    fn walk_checks() {
        let a0 = GameNode::initial(1);
        let walk = vec![WalkStep {
            from: a0.clone(),
            label: true,
            to: a0.next(true).unwrap(),
        }];
        assert!(traversal_length_check(&walk, 1));
        let a0 = GameNode::initial(2);
        let b = a0.next(true).unwrap();
        let c = b.next(false).unwrap();
        let walk = vec![
            WalkStep { from: a0, label: true, to: b.clone() },
            WalkStep { from: b, label: false, to: c.clone() },
            WalkStep { from: c, label: false, to: GameNode::Bottom },
        ];
        assert!(traversal_length_check(&walk, 2));
    }
}
