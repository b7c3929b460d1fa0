//! Up/down ratings, unlocked by a full copy of the project.

use serde::{Deserialize, Serialize};

use crate::catalog::store::{Key, Row};
use crate::catalog::{aggregate_of, project_ref, viewable, Catalog, State};
use crate::domain::{EventAction, ProjectId, Rating, RatingValue, Score, UserId};
use crate::error::{Error, Result};

/// What a viewer needs to render rating controls.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingStatus {
    pub aggregate: Score,
    pub own: Option<RatingValue>,
    pub eligible: bool,
}

fn eligible(state: &State, user: UserId, project: ProjectId) -> bool {
    state
        .projects
        .get(&project)
        .is_some_and(|p| p.owner != user)
        && state.full_copies.contains(&(user, project))
}

impl Catalog {
    /// True iff `user` made a full copy of `project` and does not own it.
    pub fn is_eligible(&self, user: UserId, project: ProjectId) -> bool {
        self.read(|state| eligible(state, user, project))
    }

    /// Sets the user's single rating on `project`. Repeating the current
    /// value changes nothing and logs no event.
    pub fn rate(&self, user: UserId, project: ProjectId, value: RatingValue) -> Result<Score> {
        self.write(|tx| {
            viewable(tx.state(), user, project)?;
            if !eligible(tx.state(), user, project) {
                return Err(Error::NotEligible);
            }
            let current = tx.state().ratings.get(&(project, user)).map(|r| r.value);
            if current != Some(value) {
                tx.put(Row::Rating(Rating {
                    user,
                    project,
                    value,
                    updated_at: tx.now,
                }));
                let target = match value {
                    RatingValue::Up => "up",
                    RatingValue::Down => "down",
                };
                tx.record(project, user, EventAction::RatingSet, target)?;
            }
            Ok(aggregate_of(tx.state(), project))
        })
    }

    pub fn unrate(&self, user: UserId, project: ProjectId) -> Result<Score> {
        self.write(|tx| {
            project_ref(tx.state(), project)?;
            if tx.delete(Key::Rating(project, user)).is_none() {
                return Err(Error::NoRating);
            }
            tx.record(project, user, EventAction::RatingCleared, "")?;
            Ok(aggregate_of(tx.state(), project))
        })
    }

    pub fn aggregate(&self, project: ProjectId) -> Result<Score> {
        self.read(|state| {
            project_ref(state, project)?;
            Ok(aggregate_of(state, project))
        })
    }

    pub fn own_rating(&self, user: UserId, project: ProjectId) -> Option<RatingValue> {
        self.read(|state| state.ratings.get(&(project, user)).map(|r| r.value))
    }

    /// Aggregate, own vote and eligibility for a project the requester can see.
    pub fn rating_status(&self, requester: UserId, project: ProjectId) -> Result<RatingStatus> {
        self.read(|state| {
            viewable(state, requester, project)?;
            Ok(RatingStatus {
                aggregate: aggregate_of(state, project),
                own: state.ratings.get(&(project, requester)).map(|r| r.value),
                eligible: eligible(state, requester, project),
            })
        })
    }
}
