use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AccessError;

/// Random draws attempted before falling back to enumerating the free combinations.
pub const MINT_ATTEMPTS: usize = 100;

/// Largest pseudonym space the enumeration fallback will walk.
const ENUMERATION_LIMIT: u64 = 1 << 20;

/// A three-word name such as `complex chestnut sheep`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pseudonym {
    words: [String; 3],
}

impl Pseudonym {
    pub fn words(&self) -> &[String; 3] {
        &self.words
    }
}

impl fmt::Display for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.words[0], self.words[1], self.words[2])
    }
}

impl fmt::Debug for Pseudonym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pseudonym({self})")
    }
}

impl TryFrom<String> for Pseudonym {
    type Error = AccessError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        let parts: Vec<&str> = value.split(' ').collect();
        match parts.as_slice() {
            [a, m, n] if parts.iter().all(|w| valid_word(w)) => Ok(Pseudonym {
                words: [a.to_string(), m.to_string(), n.to_string()],
            }),
            _ => Err(AccessError::InvalidWordList(format!("not a pseudonym: {value:?}"))),
        }
    }
}

impl From<Pseudonym> for String {
    fn from(p: Pseudonym) -> Self {
        p.to_string()
    }
}

fn valid_word(word: &str) -> bool {
    !word.is_empty() && word.chars().all(|c| c.is_lowercase() || c.is_ascii_digit() || c == '-')
}

/// The adjective, modifier and noun lists pseudonyms are drawn from.
#[derive(Clone, Debug)]
pub struct WordLists {
    lists: [Vec<String>; 3],
}

impl WordLists {
    pub fn new(adjectives: Vec<String>, modifiers: Vec<String>, nouns: Vec<String>) -> Result<Self, AccessError> {
        let lists = [adjectives, modifiers, nouns];
        for (list, name) in lists.iter().zip(["adjective", "modifier", "noun"]) {
            if list.is_empty() {
                return Err(AccessError::InvalidWordList(format!("{name} list is empty")));
            }
            if let Some(bad) = list.iter().find(|w| !valid_word(w)) {
                return Err(AccessError::InvalidWordList(format!(
                    "{name} list has invalid word {bad:?}"
                )));
            }
            let distinct: HashSet<&String> = list.iter().collect();
            if distinct.len() != list.len() {
                return Err(AccessError::InvalidWordList(format!("{name} list has duplicates")));
            }
        }
        Ok(Self { lists })
    }

    /// The lists shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_texts(
            include_str!("../../wordlists/adjectives.txt"),
            include_str!("../../wordlists/modifiers.txt"),
            include_str!("../../wordlists/nouns.txt"),
        )
        .expect("bundled word lists are valid")
    }

    pub fn from_texts(adjectives: &str, modifiers: &str, nouns: &str) -> Result<Self, AccessError> {
        Self::new(parse_list(adjectives), parse_list(modifiers), parse_list(nouns))
    }

    pub fn from_files(paths: [&Path; 3]) -> Result<Self, AccessError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p)
                .map_err(|e| AccessError::InvalidWordList(format!("{}: {e}", p.display())))
        };
        Self::from_texts(&read(paths[0])?, &read(paths[1])?, &read(paths[2])?)
    }

    pub fn combinations(&self) -> u64 {
        self.lists.iter().map(|l| l.len() as u64).product()
    }

    pub fn contains(&self, pseudonym: &Pseudonym) -> bool {
        self.lists
            .iter()
            .zip(pseudonym.words.iter())
            .all(|(list, w)| list.contains(w))
    }

    fn compose(&self, idx: [usize; 3]) -> Pseudonym {
        Pseudonym {
            words: [
                self.lists[0][idx[0]].clone(),
                self.lists[1][idx[1]].clone(),
                self.lists[2][idx[2]].clone(),
            ],
        }
    }
}

fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Draws one word uniformly from each list, redrawing while the result collides with a
/// live pseudonym.
pub fn mint_pseudonym<R: Rng + ?Sized>(
    rng: &mut R,
    words: &WordLists,
    live: &HashSet<Pseudonym>,
) -> Result<Pseudonym, AccessError> {
    let total = words.combinations();
    let live_in_space = live.iter().filter(|p| words.contains(p)).count() as u64;
    if live_in_space >= total {
        return Err(AccessError::PseudonymSpaceExhausted);
    }

    for _ in 0..MINT_ATTEMPTS {
        let idx = [
            rng.gen_range(0..words.lists[0].len()),
            rng.gen_range(0..words.lists[1].len()),
            rng.gen_range(0..words.lists[2].len()),
        ];
        let candidate = words.compose(idx);
        if !live.contains(&candidate) {
            return Ok(candidate);
        }
    }

    // Nearly full space: pick uniformly among whatever is left.
    if total > ENUMERATION_LIMIT {
        return Err(AccessError::PseudonymSpaceExhausted);
    }
    let [a, m, n] = [0, 1, 2].map(|i| words.lists[i].len());
    let free: Vec<[usize; 3]> = (0..a)
        .flat_map(|i| (0..m).flat_map(move |j| (0..n).map(move |k| [i, j, k])))
        .filter(|&idx| !live.contains(&words.compose(idx)))
        .collect();
    if free.is_empty() {
        return Err(AccessError::PseudonymSpaceExhausted);
    }
    Ok(words.compose(free[rng.gen_range(0..free.len())]))
}
