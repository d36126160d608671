//! Input masks for the masked edit box.
//!
//! Grammar: `#` takes a digit, `A` an ASCII letter, `*` any printable
//! character; anything else is a literal the controller types on the user's
//! behalf. Literals are inserted right before the next input slot, and
//! trailing literals right after the last slot is filled.

use crate::vocab::RenderCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskChar {
    Digit,
    Letter,
    Any,
    Literal(char),
}

impl MaskChar {
    fn from_char(c: char) -> Self {
        match c {
            '#' => MaskChar::Digit,
            'A' => MaskChar::Letter,
            '*' => MaskChar::Any,
            other => MaskChar::Literal(other),
        }
    }

    pub fn is_slot(&self) -> bool {
        !matches!(self, MaskChar::Literal(_))
    }

    /// Whether `c` may occupy this position in a filled buffer.
    pub fn admits(&self, c: char) -> bool {
        match self {
            MaskChar::Digit => c.is_ascii_digit(),
            MaskChar::Letter => c.is_ascii_alphabetic(),
            MaskChar::Any => !c.is_control(),
            MaskChar::Literal(l) => *l == c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    chars: Vec<MaskChar>,
}

impl Mask {
    pub fn new(mask: &str) -> Self {
        Self {
            chars: mask.chars().map(MaskChar::from_char).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn slot_count(&self) -> usize {
        self.chars.iter().filter(|c| c.is_slot()).count()
    }

    pub fn chars(&self) -> &[MaskChar] {
        &self.chars
    }

    /// `buffer` is a position-by-position valid partial fill.
    pub fn accepts_prefix(&self, buffer: &str) -> bool {
        let mut n = 0;
        for (i, c) in buffer.chars().enumerate() {
            match self.chars.get(i) {
                Some(m) if m.admits(c) => n += 1,
                _ => return false,
            }
        }
        n <= self.chars.len()
    }

    pub fn matches_complete(&self, text: &str) -> bool {
        text.chars().count() == self.chars.len() && self.accepts_prefix(text)
    }
}

/// Outcome of feeding one key to the mask interpreter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskStep {
    pub accepted: bool,
    /// Characters written, in order: leading literals, the key, trailing literals.
    pub writes: Vec<(usize, char)>,
    pub buffer: String,
    pub cursor: usize,
}

impl MaskStep {
    pub fn render_commands(&self, property: &str) -> Vec<RenderCommand> {
        self.writes
            .iter()
            .map(|&(pos, c)| RenderCommand::set_char_at(property, pos, c))
            .collect()
    }
}

pub fn mask_step(mask: &str, buffer: &str, key: char) -> MaskStep {
    Mask::new(mask).step(buffer, key)
}

impl Mask {
    pub fn step(&self, buffer: &str, key: char) -> MaskStep {
        let cursor = buffer.chars().count();
        let rejected = || MaskStep {
            accepted: false,
            writes: Vec::new(),
            buffer: buffer.to_string(),
            cursor,
        };
        if !self.accepts_prefix(buffer) {
            return rejected();
        }
        let mut writes = Vec::new();
        let mut pos = cursor;
        while let Some(MaskChar::Literal(l)) = self.chars.get(pos) {
            writes.push((pos, *l));
            pos += 1;
        }
        match self.chars.get(pos) {
            Some(slot) if slot.admits(key) => writes.push((pos, key)),
            _ => return rejected(),
        }
        pos += 1;
        if !self.chars[pos..].iter().any(MaskChar::is_slot) {
            for (i, m) in self.chars.iter().enumerate().skip(pos) {
                if let MaskChar::Literal(l) = m {
                    writes.push((i, *l));
                }
            }
            pos = self.chars.len();
        }
        let mut next = buffer.to_string();
        next.extend(writes.iter().map(|&(_, c)| c));
        MaskStep {
            accepted: true,
            writes,
            buffer: next,
            cursor: pos,
        }
    }
}
