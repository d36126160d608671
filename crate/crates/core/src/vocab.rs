//! The closed input (gesture) and output (render command) vocabularies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Open,
    Commit,
    Cancel,
    Close,
    NextPage,
    PrevPage,
    NewWindow,
    Yes,
    No,
    Retry,
    Abort,
    Ignore,
    Save,
}

impl CommandName {
    pub const ALL: [CommandName; 13] = [
        CommandName::Open,
        CommandName::Commit,
        CommandName::Cancel,
        CommandName::Close,
        CommandName::NextPage,
        CommandName::PrevPage,
        CommandName::NewWindow,
        CommandName::Yes,
        CommandName::No,
        CommandName::Retry,
        CommandName::Abort,
        CommandName::Ignore,
        CommandName::Save,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Open => "open",
            CommandName::Commit => "commit",
            CommandName::Cancel => "cancel",
            CommandName::Close => "close",
            CommandName::NextPage => "next_page",
            CommandName::PrevPage => "prev_page",
            CommandName::NewWindow => "new_window",
            CommandName::Yes => "yes",
            CommandName::No => "no",
            CommandName::Retry => "retry",
            CommandName::Abort => "abort",
            CommandName::Ignore => "ignore",
            CommandName::Save => "save",
        }
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VocabError {
    #[error("unknown command name {0:?}")]
    UnknownCommand(String),
    #[error("malformed gesture {0:?}")]
    MalformedGesture(String),
}

impl FromStr for CommandName {
    type Err = VocabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommandName::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| VocabError::UnknownCommand(s.to_string()))
    }
}

/// User input arriving at a view.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gesture {
    Key(char),
    Edit(String, String),
    Focus(String),
    Command(CommandName),
}

impl Gesture {
    pub fn edit(property: impl Into<String>, raw: impl Into<String>) -> Self {
        Gesture::Edit(property.into(), raw.into())
    }

    /// Bus verb: `key`, `edit`, `focus`, or the command name.
    pub fn verb(&self) -> &'static str {
        match self {
            Gesture::Key(_) => "key",
            Gesture::Edit(..) => "edit",
            Gesture::Focus(_) => "focus",
            Gesture::Command(c) => c.as_str(),
        }
    }
}

/// Line syntax used by the interactive terminal: `key 3`, `edit A1 =()`,
/// `focus A1`, or a bare command name.
impl FromStr for Gesture {
    type Err = VocabError;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let line = line.trim_end_matches(['\r', '\n']);
        let malformed = || VocabError::MalformedGesture(line.to_string());
        let (head, rest) = match line.split_once(' ') {
            Some((h, r)) => (h, Some(r)),
            None => (line, None),
        };
        match (head, rest) {
            ("key", Some(r)) => {
                let mut chars = r.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Ok(Gesture::Key(c)),
                    _ => Err(malformed()),
                }
            }
            ("edit", Some(r)) => {
                let (prop, raw) = r.split_once(' ').unwrap_or((r, ""));
                if prop.is_empty() {
                    return Err(malformed());
                }
                Ok(Gesture::edit(prop, raw))
            }
            ("focus", Some(r)) if !r.is_empty() && !r.contains(' ') => {
                Ok(Gesture::Focus(r.to_string()))
            }
            ("key" | "edit" | "focus", _) => Err(malformed()),
            (name, None) => name.parse().map(Gesture::Command),
            _ => Err(malformed()),
        }
    }
}

impl fmt::Display for Gesture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gesture::Key(c) => write!(f, "key {c}"),
            Gesture::Edit(p, raw) => write!(f, "edit {p} {raw}"),
            Gesture::Focus(p) => write!(f, "focus {p}"),
            Gesture::Command(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PromptKind {
    SaveChanges,
    AbortRetryIgnore,
}

impl PromptKind {
    pub fn options(&self) -> [CommandName; 3] {
        match self {
            PromptKind::SaveChanges => [CommandName::Yes, CommandName::No, CommandName::Cancel],
            PromptKind::AbortRetryIgnore => {
                [CommandName::Abort, CommandName::Retry, CommandName::Ignore]
            }
        }
    }
}

/// Output from a triad to one view surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderCommand {
    SetText {
        property: String,
        text: String,
    },
    SetCharAt {
        property: String,
        position: usize,
        character: char,
    },
    ShowError {
        message: String,
    },
    ShowBusy {
        busy: bool,
    },
    ShowPage {
        rows: Vec<Snapshot>,
        page: u32,
        page_count: u32,
    },
    Prompt {
        kind: PromptKind,
        options: Vec<CommandName>,
    },
    SelectRange {
        property: String,
        start: usize,
        end: usize,
    },
    Detach {
        view: String,
    },
}

impl RenderCommand {
    pub fn set_text(property: impl Into<String>, text: impl Into<String>) -> Self {
        RenderCommand::SetText {
            property: property.into(),
            text: text.into(),
        }
    }

    pub fn set_char_at(property: impl Into<String>, position: usize, character: char) -> Self {
        RenderCommand::SetCharAt {
            property: property.into(),
            position,
            character,
        }
    }

    /// Prompt with exactly the options its kind allows.
    pub fn prompt(kind: PromptKind) -> Self {
        RenderCommand::Prompt {
            kind,
            options: kind.options().to_vec(),
        }
    }

    /// `None` when `start > end`.
    pub fn select_range(property: impl Into<String>, start: usize, end: usize) -> Option<Self> {
        (start <= end).then(|| RenderCommand::SelectRange {
            property: property.into(),
            start,
            end,
        })
    }

    pub fn verb(&self) -> &'static str {
        match self {
            RenderCommand::SetText { .. } => "set_text",
            RenderCommand::SetCharAt { .. } => "set_char_at",
            RenderCommand::ShowError { .. } => "show_error",
            RenderCommand::ShowBusy { .. } => "show_busy",
            RenderCommand::ShowPage { .. } => "show_page",
            RenderCommand::Prompt { .. } => "prompt",
            RenderCommand::SelectRange { .. } => "select_range",
            RenderCommand::Detach { .. } => "detach",
        }
    }

    /// Commands that carry model data (as opposed to status, errors and prompts).
    pub fn carries_data(&self) -> bool {
        matches!(
            self,
            RenderCommand::SetText { .. }
                | RenderCommand::SetCharAt { .. }
                | RenderCommand::ShowPage { .. }
                | RenderCommand::SelectRange { .. }
        )
    }

    /// Structural invariants (prompt options, range order).
    pub fn is_well_formed(&self) -> bool {
        match self {
            RenderCommand::Prompt { kind, options } => options.as_slice() == kind.options(),
            RenderCommand::SelectRange { start, end, .. } => start <= end,
            _ => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_command_rejected_at_parse() {
        assert_eq!(
            "jump".parse::<CommandName>(),
            Err(VocabError::UnknownCommand("jump".into()))
        );
        assert!("jump".parse::<Gesture>().is_err());
    }

    #[test]
    fn gesture_line_syntax() {
        assert_eq!("key 3".parse::<Gesture>().unwrap(), Gesture::Key('3'));
        assert_eq!(
            "edit A1 =()".parse::<Gesture>().unwrap(),
            Gesture::edit("A1", "=()")
        );
        assert_eq!(
            "edit note hello world".parse::<Gesture>().unwrap(),
            Gesture::edit("note", "hello world")
        );
        assert_eq!("edit A1".parse::<Gesture>().unwrap(), Gesture::edit("A1", ""));
        assert_eq!(
            "next_page".parse::<Gesture>().unwrap(),
            Gesture::Command(CommandName::NextPage)
        );
        assert!("key".parse::<Gesture>().is_err());
        assert!("key ab".parse::<Gesture>().is_err());
        for g in [Gesture::Key('x'), Gesture::edit("a", "b c"), Gesture::Focus("f".into())] {
            assert_eq!(g.to_string().parse::<Gesture>().unwrap(), g);
        }
    }

    #[test]
    fn prompt_options_are_fixed() {
        let p = RenderCommand::prompt(PromptKind::SaveChanges);
        assert!(p.is_well_formed());
        match p {
            RenderCommand::Prompt { options, .. } => assert_eq!(
                options,
                [CommandName::Yes, CommandName::No, CommandName::Cancel]
            ),
            _ => unreachable!(),
        }
        let bad = RenderCommand::Prompt {
            kind: PromptKind::AbortRetryIgnore,
            options: vec![CommandName::Yes],
        };
        assert!(!bad.is_well_formed());
    }

    #[test]
    fn select_range_order() {
        assert!(RenderCommand::select_range("a", 3, 1).is_none());
        assert!(RenderCommand::select_range("a", 1, 1).is_some());
    }
}
