//! Environments: three team card games and a toy model.

pub mod cards;
pub mod goofspiel;
pub mod toy;
pub mod trick;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use goofspiel::{goofspiel_model, Goofspiel, GoofspielConfig, TieRule};
pub use toy::{Toy, ToyConfig};
pub use trick::{euchre_model, spades_model, Rules, TrickConfig, TrickGame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameKind {
    Goofspiel,
    Euchre,
    Spades,
    Toy,
}

impl GameKind {
    pub const ALL: [GameKind; 4] = [GameKind::Goofspiel, GameKind::Euchre, GameKind::Spades, GameKind::Toy];

    pub fn name(self) -> &'static str {
        match self {
            GameKind::Goofspiel => "goofspiel",
            GameKind::Euchre => "euchre",
            GameKind::Spades => "spades",
            GameKind::Toy => "toy",
        }
    }
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        GameKind::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("teamgoofspiel") && *g == GameKind::Goofspiel))
            .ok_or_else(|| format!("unknown game {s:?}; expected one of goofspiel, euchre, spades, toy"))
    }
}
