use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Suit {
    Clubs,
    Diamonds,
    Hearts,
    Spades,
}

impl Suit {
    pub const ALL: [Suit; 4] = [Suit::Clubs, Suit::Diamonds, Suit::Hearts, Suit::Spades];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Suit {
        Suit::ALL[i]
    }

    pub fn letter(self) -> char {
        ['C', 'D', 'H', 'S'][self as usize]
    }

    pub fn is_red(self) -> bool {
        matches!(self, Suit::Diamonds | Suit::Hearts)
    }

    /// The other suit of the same colour.
    pub fn partner(self) -> Suit {
        match self {
            Suit::Clubs => Suit::Spades,
            Suit::Spades => Suit::Clubs,
            Suit::Diamonds => Suit::Hearts,
            Suit::Hearts => Suit::Diamonds,
        }
    }
}

pub const JACK: u8 = 11;
pub const QUEEN: u8 = 12;
pub const KING: u8 = 13;
pub const ACE: u8 = 14;

/// A card of the standard 52-card deck; `index = suit * 13 + (rank - 2)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Card(u8);

impl Card {
    pub const DECK: usize = 52;

    /// `rank` runs from 2 to 14 (ace).
    pub fn new(suit: Suit, rank: u8) -> Card {
        assert!((2..=ACE).contains(&rank), "rank out of range");
        Card(suit as u8 * 13 + rank - 2)
    }

    pub fn from_index(i: usize) -> Card {
        assert!(i < Self::DECK, "card index out of range");
        Card(i as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn suit(self) -> Suit {
        Suit::from_index(self.0 as usize / 13)
    }

    pub fn rank(self) -> u8 {
        self.0 % 13 + 2
    }

    pub fn token(self) -> String {
        let r = match self.rank() {
            JACK => "J".to_string(),
            QUEEN => "Q".to_string(),
            KING => "K".to_string(),
            ACE => "A".to_string(),
            n => n.to_string(),
        };
        format!("{}{}", self.suit().letter(), r)
    }
}

impl fmt::Debug for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl fmt::Display for Card {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for Card {
    type Err = String;

    fn from_str(s: &str) -> Result<Card, String> {
        let mut chars = s.chars();
        let suit = match chars.next() {
            Some('C') => Suit::Clubs,
            Some('D') => Suit::Diamonds,
            Some('H') => Suit::Hearts,
            Some('S') => Suit::Spades,
            _ => return Err(format!("bad card token {s:?}")),
        };
        let rank = match chars.as_str() {
            "J" => JACK,
            "Q" => QUEEN,
            "K" => KING,
            "A" => ACE,
            n => match n.parse::<u8>() {
                Ok(v) if (2..=10).contains(&v) => v,
                _ => return Err(format!("bad card token {s:?}")),
            },
        };
        Ok(Card::new(suit, rank))
    }
}

impl Serialize for Card {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.token())
    }
}

impl<'de> Deserialize<'de> for Card {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Card, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parse a whitespace separated list of card tokens.
pub fn cards(s: &str) -> Vec<Card> {
    s.split_whitespace().map(|t| t.parse().expect("card token")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_layout() {
        assert_eq!(Card::new(Suit::Clubs, 2).index(), 0);
        assert_eq!(Card::new(Suit::Spades, ACE).index(), 51);
        for i in 0..52 {
            let c = Card::from_index(i);
            assert_eq!(Card::new(c.suit(), c.rank()), c);
        }
    }

    #[test]
    fn tokens_round_trip() {
        assert_eq!(Card::new(Suit::Spades, ACE).token(), "SA");
        assert_eq!(Card::new(Suit::Hearts, 10).token(), "H10");
        for i in 0..52 {
            let c = Card::from_index(i);
            assert_eq!(c.token().parse::<Card>().unwrap(), c);
        }
        assert!("X3".parse::<Card>().is_err());
        assert!("H1".parse::<Card>().is_err());
        assert_eq!(serde_json::to_string(&Card::new(Suit::Diamonds, 9)).unwrap(), "\"D9\"");
    }
}
