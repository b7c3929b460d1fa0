//! Inverted index over project and asset text, kept in lockstep with the
//! catalog tables (postings are rewritten whenever a project or asset row is
//! written, inside the same transaction).
//!
//! Scoring is additive per query term: an exact tag match is worth 3, a name
//! (or filename) match 2 and a description match 1. Terms are ANDed.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::catalog::{can_view, Catalog, Page, PageRequest, State};
use crate::domain::{normalize_tag, AssetId, AssetMeta, Project, ProjectId, Timestamp, UserId};
use crate::error::{Error, Result};

const TAG: u8 = 1;
const NAME: u8 = 2;
const DESCRIPTION: u8 = 4;

const TAG_WEIGHT: u32 = 3;
const NAME_WEIGHT: u32 = 2;
const DESCRIPTION_WEIGHT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum EntityRef {
    Project(ProjectId),
    Asset(AssetId),
}

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Default)]
pub(crate) struct SearchIndex {
    postings: HashMap<String, HashMap<EntityRef, u8>>,
    terms: HashMap<EntityRef, Vec<String>>,
}

impl SearchIndex {
    fn insert(&mut self, entity: EntityRef, fields: HashMap<String, u8>) {
        self.remove(&entity);
        let mut terms = Vec::with_capacity(fields.len());
        for (term, mask) in fields {
            self.postings
                .entry(term.clone())
                .or_default()
                .insert(entity.clone(), mask);
            terms.push(term);
        }
        self.terms.insert(entity, terms);
    }

    pub fn index_project(&mut self, project: &Project) {
        let mut fields: HashMap<String, u8> = HashMap::new();
        for tag in &project.tags {
            *fields.entry(tag.as_str().to_owned()).or_default() |= TAG;
        }
        for token in tokenize(&project.name) {
            *fields.entry(token).or_default() |= NAME;
        }
        for token in tokenize(&project.description) {
            *fields.entry(token).or_default() |= DESCRIPTION;
        }
        self.insert(EntityRef::Project(project.id), fields);
    }

    pub fn index_asset(&mut self, asset: &AssetMeta) {
        let mut fields: HashMap<String, u8> = HashMap::new();
        for tag in &asset.tags {
            *fields.entry(tag.as_str().to_owned()).or_default() |= TAG;
        }
        for token in tokenize(&asset.original_filename) {
            *fields.entry(token).or_default() |= NAME;
        }
        self.insert(EntityRef::Asset(asset.id.clone()), fields);
    }

    pub fn remove(&mut self, entity: &EntityRef) {
        let Some(terms) = self.terms.remove(entity) else {
            return;
        };
        for term in terms {
            if let Some(posting) = self.postings.get_mut(&term) {
                posting.remove(entity);
                if posting.is_empty() {
                    self.postings.remove(&term);
                }
            }
        }
    }

    fn mask(&self, term: &str, entity: &EntityRef) -> u8 {
        self.postings
            .get(term)
            .and_then(|p| p.get(entity))
            .copied()
            .unwrap_or(0)
    }

    /// Terms currently indexed for `entity`, sorted. Exposed for tests.
    pub fn terms_of(&self, entity: &EntityRef) -> Vec<String> {
        let mut terms = self.terms.get(entity).cloned().unwrap_or_default();
        terms.sort();
        terms
    }

    fn evaluate(&self, query: &[QueryTerm]) -> Vec<(EntityRef, u32, u8)> {
        let first = &query[0];
        let mut candidates: HashSet<&EntityRef> = HashSet::new();
        let seeds = first.tag.iter().chain(first.tokens.iter());
        for term in seeds {
            if let Some(p) = self.postings.get(term) {
                candidates.extend(p.keys());
            }
        }

        let mut hits = Vec::new();
        'entities: for entity in candidates {
            let mut total = 0;
            let mut matched = 0u8;
            for term in query {
                let (score, fields) = self.score_term(term, entity);
                if score == 0 {
                    continue 'entities;
                }
                total += score;
                matched |= fields;
            }
            hits.push((entity.clone(), total, matched));
        }
        hits
    }

    fn score_term(&self, term: &QueryTerm, entity: &EntityRef) -> (u32, u8) {
        let mut score = 0;
        let mut fields = 0;
        if let Some(tag) = &term.tag {
            if self.mask(tag, entity) & TAG != 0 {
                score += TAG_WEIGHT;
                fields |= TAG;
            }
        }
        if !term.tokens.is_empty() {
            let all = |bit: u8| term.tokens.iter().all(|t| self.mask(t, entity) & bit != 0);
            if all(NAME) {
                score += NAME_WEIGHT;
                fields |= NAME;
            }
            if all(DESCRIPTION) {
                score += DESCRIPTION_WEIGHT;
                fields |= DESCRIPTION;
            }
        }
        (score, fields)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct QueryTerm {
    tag: Option<String>,
    tokens: Vec<String>,
}

/// Splits a query on whitespace. Each word matches as a tag (after tag
/// normalization) or as a run of tokens.
fn parse_query(query: &str) -> Result<Vec<QueryTerm>> {
    let terms: Vec<QueryTerm> = query
        .split_whitespace()
        .map(|word| QueryTerm {
            tag: normalize_tag(word).ok().map(String::from),
            tokens: tokenize(word),
        })
        .filter(|t| t.tag.is_some() || !t.tokens.is_empty())
        .collect();
    if terms.is_empty() {
        Err(Error::EmptyQuery)
    } else {
        Ok(terms)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResultKind {
    Project,
    Asset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub kind: ResultKind,
    pub id: String,
    /// Project name or asset filename.
    pub title: String,
    pub score: u32,
    pub matched_fields: Vec<String>,
    pub updated_at: Timestamp,
}

fn field_names(mask: u8, kind: ResultKind) -> Vec<String> {
    let mut out = Vec::new();
    if mask & TAG != 0 {
        out.push("tags".to_owned());
    }
    if mask & NAME != 0 {
        out.push(match kind {
            ResultKind::Project => "name".to_owned(),
            ResultKind::Asset => "filename".to_owned(),
        });
    }
    if mask & DESCRIPTION != 0 {
        out.push("description".to_owned());
    }
    out
}

fn rank(results: &mut [QueryResult]) {
    results.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(b.updated_at.cmp(&a.updated_at))
            .then(a.id.cmp(&b.id))
    });
}

pub(crate) fn asset_visible(state: &State, requester: UserId, asset: &AssetMeta) -> bool {
    asset.uploader == requester
        || state.asset_projects.get(&asset.id).is_some_and(|projects| {
            projects.keys().any(|p| {
                state
                    .projects
                    .get(p)
                    .is_some_and(|p| can_view(p, requester))
            })
        })
}

impl Catalog {
    /// Public projects and the requester's own whose text matches every
    /// query term.
    pub fn search_projects(
        &self,
        requester: UserId,
        query: &str,
        page: PageRequest,
    ) -> Result<Page<QueryResult>> {
        let terms = parse_query(query)?;
        page.validate()?;
        self.read(|state| {
            let mut results: Vec<QueryResult> = state
                .search
                .evaluate(&terms)
                .into_iter()
                .filter_map(|(entity, score, mask)| match entity {
                    EntityRef::Project(id) => {
                        let p = state.projects.get(&id)?;
                        can_view(p, requester).then(|| QueryResult {
                            kind: ResultKind::Project,
                            id: id.to_string(),
                            title: p.name.clone(),
                            score,
                            matched_fields: field_names(mask, ResultKind::Project),
                            updated_at: p.updated_at,
                        })
                    }
                    EntityRef::Asset(_) => None,
                })
                .collect();
            rank(&mut results);
            Ok(page.slice(results))
        })
    }

    /// Assets matching on tags and filename tokens, restricted to those the
    /// requester uploaded or can reach through a visible project.
    pub fn search_assets(
        &self,
        requester: UserId,
        query: &str,
        page: PageRequest,
    ) -> Result<Page<QueryResult>> {
        let terms = parse_query(query)?;
        page.validate()?;
        self.read(|state| {
            let mut results: Vec<QueryResult> = state
                .search
                .evaluate(&terms)
                .into_iter()
                .filter_map(|(entity, score, mask)| match entity {
                    EntityRef::Asset(id) => {
                        let meta = state.assets.get(&id)?;
                        asset_visible(state, requester, meta).then(|| QueryResult {
                            kind: ResultKind::Asset,
                            id: id.to_string(),
                            title: meta.original_filename.clone(),
                            score,
                            matched_fields: field_names(mask, ResultKind::Asset),
                            updated_at: meta.created_at,
                        })
                    }
                    EntityRef::Project(_) => None,
                })
                .collect();
            rank(&mut results);
            Ok(page.slice(results))
        })
    }

    /// Terms indexed for a project, sorted.
    pub fn indexed_terms(&self, project: ProjectId) -> Vec<String> {
        self.read(|state| state.search.terms_of(&EntityRef::Project(project)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer() {
        assert_eq!(tokenize("Fruit Classifier"), vec!["fruit", "classifier"]);
        assert_eq!(tokenize("apple_01.png"), vec!["apple", "01", "png"]);
        assert!(tokenize("--").is_empty());
    }

    #[test]
    fn query_parsing() {
        assert!(matches!(parse_query("   "), Err(Error::EmptyQuery)));
        let terms = parse_query("Apple deep-learning").unwrap();
        assert_eq!(terms[0].tag.as_deref(), Some("apple"));
        assert_eq!(terms[1].tag.as_deref(), Some("deep-learning"));
        assert_eq!(terms[1].tokens, vec!["deep", "learning"]);
        // not a valid tag, still searchable as tokens
        let terms = parse_query("c++").unwrap();
        assert_eq!(terms[0].tag, None);
        assert_eq!(terms[0].tokens, vec!["c"]);
    }
}
