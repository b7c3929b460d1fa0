//! Tag normalization and text-field validation rules.

use std::fmt;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

pub const TAG_MAX_LEN: usize = 64;
pub const MAX_TAGS: usize = 32;
pub const PROJECT_NAME_MAX: usize = 120;
pub const FOLDER_NAME_MAX: usize = 120;
pub const DISPLAY_NAME_MAX: usize = 200;
pub const USER_NAME_MAX: usize = 80;
pub const DESCRIPTION_MAX: usize = 10_000;
pub const MIN_PASSWORD_LEN: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TagError {
    #[error("tag is empty")]
    EmptyTag,
    #[error("tag contains invalid character {0:?}")]
    InvalidCharacter(char),
    #[error("tag is longer than {TAG_MAX_LEN} characters")]
    TooLong,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NameError {
    #[error("name is empty")]
    Empty,
    #[error("name is longer than {0} characters")]
    TooLong(usize),
    #[error("name contains invalid character {0:?}")]
    InvalidCharacter(char),
}

/// A normalized label: 1 to 64 characters from `[a-z0-9._-]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Tag(String);

impl Tag {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for Tag {
    type Error = TagError;

    /// Accepts only text that is already in normalized form.
    fn try_from(value: String) -> Result<Self, Self::Error> {
        let tag = normalize_tag(&value)?;
        if tag.0 == value {
            Ok(tag)
        } else {
            Err(TagError::InvalidCharacter(
                value
                    .chars()
                    .find(|c| !is_tag_char(*c))
                    .unwrap_or(' '),
            ))
        }
    }
}

impl From<Tag> for String {
    fn from(tag: Tag) -> Self {
        tag.0
    }
}

fn is_tag_char(c: char) -> bool {
    matches!(c, 'a'..='z' | '0'..='9' | '.' | '_' | '-')
}

/// Normalizes free text into a [`Tag`]: NFC, lowercase, whitespace runs
/// collapsed to `-`.
pub fn normalize_tag(raw: &str) -> Result<Tag, TagError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(TagError::EmptyTag);
    }
    let lowered: String = trimmed.nfc().collect::<String>().to_lowercase();

    let mut out = String::with_capacity(lowered.len());
    let mut in_space = false;
    for c in lowered.chars() {
        if c.is_whitespace() {
            if !in_space {
                out.push('-');
            }
            in_space = true;
            continue;
        }
        in_space = false;
        if !is_tag_char(c) {
            return Err(TagError::InvalidCharacter(c));
        }
        out.push(c);
    }
    if out.len() > TAG_MAX_LEN {
        return Err(TagError::TooLong);
    }
    Ok(Tag(out))
}

/// Normalizes a list of raw tags into a sorted, deduplicated set.
pub fn normalize_tags<S: AsRef<str>>(raw: &[S]) -> Result<Vec<Tag>, TagError> {
    let mut tags = raw
        .iter()
        .map(|t| normalize_tag(t.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    tags.sort();
    tags.dedup();
    Ok(tags)
}

fn validate_label(name: &str, max: usize) -> Result<&str, NameError> {
    let trimmed = name.trim();
    if trimmed.is_empty() {
        return Err(NameError::Empty);
    }
    if trimmed.chars().count() > max {
        return Err(NameError::TooLong(max));
    }
    if let Some(c) = trimmed.chars().find(|c| c.is_control()) {
        return Err(NameError::InvalidCharacter(c));
    }
    Ok(trimmed)
}

pub fn validate_project_name(name: &str) -> Result<(), NameError> {
    validate_label(name, PROJECT_NAME_MAX).map(|_| ())
}

pub(crate) fn clean_project_name(name: &str) -> Result<String, NameError> {
    validate_label(name, PROJECT_NAME_MAX).map(str::to_owned)
}

pub(crate) fn clean_user_name(name: &str) -> Result<String, NameError> {
    validate_label(name, USER_NAME_MAX).map(str::to_owned)
}

/// Folder and artifact names become archive path segments, so separators and
/// dot segments are rejected on top of the usual label rules.
fn clean_segment(name: &str, max: usize) -> Result<String, NameError> {
    let trimmed = validate_label(name, max)?;
    if let Some(c) = trimmed.chars().find(|c| matches!(c, '/' | '\\')) {
        return Err(NameError::InvalidCharacter(c));
    }
    if trimmed == "." || trimmed == ".." {
        return Err(NameError::InvalidCharacter('.'));
    }
    Ok(trimmed.to_owned())
}

pub(crate) fn clean_folder_name(name: &str) -> Result<String, NameError> {
    clean_segment(name, FOLDER_NAME_MAX)
}

pub(crate) fn clean_display_name(name: &str) -> Result<String, NameError> {
    clean_segment(name, DISPLAY_NAME_MAX)
}

pub(crate) fn clean_description(text: &str) -> Result<String, NameError> {
    if text.chars().count() > DESCRIPTION_MAX {
        return Err(NameError::TooLong(DESCRIPTION_MAX));
    }
    Ok(text.to_owned())
}

/// Pragmatic address check; returns the lowercased address.
pub(crate) fn clean_email(raw: &str) -> Result<String, String> {
    let email = raw.trim().to_lowercase();
    if email.len() > 254 {
        return Err("email is too long".into());
    }
    if email.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err("email contains whitespace".into());
    }
    let Some((local, domain)) = email.split_once('@') else {
        return Err("email must contain '@'".into());
    };
    if local.is_empty() || local.len() > 64 || domain.contains('@') {
        return Err("malformed email local part".into());
    }
    let labels_ok = domain.split('.').count() >= 2 && domain.split('.').all(|l| !l.is_empty());
    if !labels_ok {
        return Err("malformed email domain".into());
    }
    Ok(email)
}
