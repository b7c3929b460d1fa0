//! Value types, identifier formats and validation rules shared by every
//! other module. Nothing in here performs I/O.

mod ids;
mod model;
mod time;
mod validate;

pub use ids::{ArtifactId, AssetId, EventSeq, FolderId, IdParseError, ProjectId, ReuseId, UserId};
pub use model::{
    canonical_roots, score, Artifact, AssetMeta, CopiedFrom, EventAction, Folder, FolderKind,
    FragmentSelector, Project, Rating, RatingValue, ReuseRecord, ReuseScope, Score,
    TrackingEvent, User, Visibility,
};
pub use time::{Clock, ManualClock, SystemClock, Timestamp};
pub use validate::{
    normalize_tag, normalize_tags, validate_project_name, NameError, Tag, TagError,
    DESCRIPTION_MAX, DISPLAY_NAME_MAX, FOLDER_NAME_MAX, MAX_TAGS, MIN_PASSWORD_LEN,
    PROJECT_NAME_MAX, TAG_MAX_LEN, USER_NAME_MAX,
};
pub(crate) use validate::{
    clean_description, clean_display_name, clean_email, clean_folder_name, clean_project_name,
    clean_user_name,
};
