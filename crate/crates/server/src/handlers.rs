use std::collections::BTreeSet;
use std::str::FromStr;

use axum::extract::{Multipart, State};
use axum::http::header::{CONTENT_DISPOSITION, CONTENT_TYPE};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use ran_core::{
    ArtifactId, AssetId, FolderId, NewArtifact, NewProject, Page, PageRequest, ProjectId,
    ProjectPatch, RatingValue, Selection,
};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::extract::{Bearer, Body, Caller, ClientIp, Id, Params};
use crate::{blocking, AppState};

type ApiResult<T = Response> = Result<T, ApiError>;

const TOTAL_COUNT: &str = "x-total-count";
const DEFAULT_FEED_LIMIT: usize = 50;

fn created<T: Serialize>(body: T) -> Response {
    (StatusCode::CREATED, Json(body)).into_response()
}

fn paged<T: Serialize>(page: Page<T>) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(TOTAL_COUNT, HeaderValue::from(page.total));
    (headers, Json(page.items)).into_response()
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

#[derive(Deserialize)]
pub struct RegisterBody {
    email: String,
    display_name: String,
    password: String,
}

pub async fn register(State(s): State<AppState>, Body(b): Body<RegisterBody>) -> ApiResult {
    let user = blocking(&s, move |r| r.register(&b.email, &b.display_name, &b.password)).await?;
    Ok(created(user))
}

#[derive(Deserialize)]
pub struct LoginBody {
    email: String,
    password: String,
}

pub async fn login(State(s): State<AppState>, Body(b): Body<LoginBody>) -> ApiResult {
    let session = blocking(&s, move |r| r.login(&b.email, &b.password)).await?;
    Ok(created(session))
}

pub async fn logout(State(s): State<AppState>, Bearer(token): Bearer) -> ApiResult<StatusCode> {
    blocking(&s, move |r| r.logout(&token)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
pub struct ListParams {
    query: Option<String>,
    page: Option<u32>,
    per_page: Option<u32>,
}

impl ListParams {
    fn page(&self) -> PageRequest {
        let d = PageRequest::default();
        PageRequest::new(self.page.unwrap_or(d.page), self.per_page.unwrap_or(d.per_page))
    }
}

pub async fn list_projects(
    State(s): State<AppState>,
    Caller(me): Caller,
    Params(p): Params<ListParams>,
) -> ApiResult {
    let page = p.page();
    match p.query {
        Some(q) => Ok(paged(blocking(&s, move |r| r.search_projects(me, &q, page)).await?)),
        None => Ok(paged(blocking(&s, move |r| r.browse(me, page)).await?)),
    }
}

pub async fn create_project(
    State(s): State<AppState>,
    Caller(me): Caller,
    Body(b): Body<NewProject>,
) -> ApiResult {
    Ok(created(blocking(&s, move |r| r.create_project(me, b)).await?))
}

pub async fn get_project(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
) -> ApiResult {
    Ok(Json(blocking(&s, move |r| r.get_project(me, id)).await?).into_response())
}

#[derive(Deserialize)]
pub struct PatchBody {
    expected_version: u64,
    #[serde(flatten)]
    patch: ProjectPatch,
}

pub async fn update_project(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Body(b): Body<PatchBody>,
) -> ApiResult {
    let p = blocking(&s, move |r| {
        r.update_project_meta(me, id, b.expected_version, b.patch)
    })
    .await?;
    Ok(Json(p).into_response())
}

pub async fn delete_project(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
) -> ApiResult<StatusCode> {
    blocking(&s, move |r| r.delete_project(me, id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
pub struct CopyBody {
    name: String,
}

pub async fn copy_project(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Body(b): Body<CopyBody>,
) -> ApiResult {
    Ok(created(blocking(&s, move |r| r.project_copy(me, id, &b.name)).await?))
}

#[derive(Deserialize)]
pub struct ImportBody {
    selection: Selection,
    target_project: ProjectId,
    target_folder: FolderId,
}

pub async fn import_selection(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Body(b): Body<ImportBody>,
) -> ApiResult {
    let summary = blocking(&s, move |r| {
        r.selection_import(me, id, &b.selection, b.target_project, b.target_folder)
    })
    .await?;
    Ok(Json(summary).into_response())
}

#[derive(Deserialize)]
pub struct PackageParams {
    folders: Option<String>,
    artifacts: Option<String>,
}

fn id_list<T: FromStr + Ord>(raw: Option<&str>) -> Result<BTreeSet<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    raw.unwrap_or_default()
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|e: T::Err| ApiError::validation(e.to_string())))
        .collect()
}

pub async fn package(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Params(p): Params<PackageParams>,
) -> ApiResult {
    let selection = Selection {
        folders: id_list(p.folders.as_deref())?,
        artifacts: id_list(p.artifacts.as_deref())?,
    };
    let (bytes, _) = blocking(&s, move |r| r.build_package(me, id, &selection)).await?;
    let disposition = format!("attachment; filename=\"{id}.zip\"");
    Ok((
        [
            (CONTENT_TYPE, "application/zip".to_owned()),
            (CONTENT_DISPOSITION, disposition),
        ],
        bytes,
    )
        .into_response())
}

pub async fn rating_status(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
) -> ApiResult {
    Ok(Json(blocking(&s, move |r| r.rating_status(me, id)).await?).into_response())
}

#[derive(Deserialize)]
pub struct RateBody {
    value: RatingValue,
}

pub async fn rate(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Body(b): Body<RateBody>,
) -> ApiResult {
    let status = blocking(&s, move |r| {
        r.rate(me, id, b.value)?;
        r.rating_status(me, id)
    })
    .await?;
    Ok(Json(status).into_response())
}

pub async fn unrate(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
) -> ApiResult {
    let status = blocking(&s, move |r| {
        r.unrate(me, id)?;
        r.rating_status(me, id)
    })
    .await?;
    Ok(Json(status).into_response())
}

#[derive(Deserialize)]
pub struct EventParams {
    limit: Option<usize>,
    before: Option<u64>,
}

pub async fn events(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Params(p): Params<EventParams>,
) -> ApiResult {
    let limit = p.limit.unwrap_or(DEFAULT_FEED_LIMIT);
    let feed = blocking(&s, move |r| r.tracking_feed(me, id, limit, p.before)).await?;
    Ok(Json(feed).into_response())
}

#[derive(Deserialize)]
pub struct FolderBody {
    parent: FolderId,
    name: String,
}

pub async fn create_folder(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ProjectId>,
    Body(b): Body<FolderBody>,
) -> ApiResult {
    Ok(created(
        blocking(&s, move |r| r.folder_create(me, id, b.parent, &b.name)).await?,
    ))
}

pub async fn list_folder(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<FolderId>,
) -> ApiResult {
    Ok(Json(blocking(&s, move |r| r.folder_list(me, id)).await?).into_response())
}

#[derive(Deserialize)]
pub struct RenameBody {
    name: String,
}

pub async fn rename_folder(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<FolderId>,
    Body(b): Body<RenameBody>,
) -> ApiResult {
    Ok(Json(blocking(&s, move |r| r.folder_rename(me, id, &b.name)).await?).into_response())
}

#[derive(Serialize)]
struct Removed {
    artifacts_removed: u64,
}

pub async fn delete_folder(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<FolderId>,
) -> ApiResult {
    let n = blocking(&s, move |r| r.folder_delete(me, id)).await?;
    Ok(Json(Removed { artifacts_removed: n }).into_response())
}

pub async fn add_artifact(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<FolderId>,
    Body(b): Body<NewArtifact>,
) -> ApiResult {
    Ok(created(blocking(&s, move |r| r.artifact_add(me, id, b)).await?))
}

pub async fn remove_artifact(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<ArtifactId>,
) -> ApiResult<StatusCode> {
    blocking(&s, move |r| r.artifact_remove(me, id)).await?;
    Ok(StatusCode::NO_CONTENT)
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, "TooLarge", e.body_text())
    } else {
        ApiError::validation(e.body_text())
    }
}

/// Multipart with a `file` part and any number of `tags` parts, each a
/// comma-separated list.
pub async fn upload_asset(
    State(s): State<AppState>,
    ClientIp(ip): ClientIp,
    Caller(me): Caller,
    mut form: Multipart,
) -> ApiResult {
    let _permit = match ip {
        Some(ip) => Some(s.uploads.acquire(ip).ok_or_else(|| {
            ApiError::new(
                StatusCode::TOO_MANY_REQUESTS,
                "UploadLimit",
                "too many concurrent uploads from this address",
            )
        })?),
        None => None,
    };
    let mut file = None;
    let mut tags = Vec::new();
    while let Some(field) = form.next_field().await.map_err(multipart_error)? {
        match field.name() {
            Some("file") => {
                let name = field.file_name().unwrap_or_default().to_owned();
                let bytes = field.bytes().await.map_err(multipart_error)?;
                file = Some((name, bytes));
            }
            Some("tags") => {
                let text = field.text().await.map_err(multipart_error)?;
                tags.extend(
                    text.split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(str::to_owned),
                );
            }
            _ => {}
        }
    }
    let (name, bytes) = file.ok_or_else(|| ApiError::validation("missing `file` part"))?;
    let outcome = blocking(&s, move |r| r.upload_asset(me, &name, &bytes[..], &tags)).await?;
    let status = if outcome.existing {
        StatusCode::OK
    } else {
        StatusCode::CREATED
    };
    Ok((status, Json(outcome)).into_response())
}

pub async fn download_asset(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<AssetId>,
) -> ApiResult {
    let (meta, bytes) = blocking(&s, move |r| {
        let meta = r.asset_meta(me, &id)?;
        Ok((meta, r.download_asset(me, &id)?))
    })
    .await?;
    Ok(([(CONTENT_TYPE, meta.media_type)], bytes).into_response())
}

pub async fn asset_meta(
    State(s): State<AppState>,
    Caller(me): Caller,
    Id(id): Id<AssetId>,
) -> ApiResult {
    Ok(Json(blocking(&s, move |r| r.asset_meta(me, &id)).await?).into_response())
}

pub async fn search_assets(
    State(s): State<AppState>,
    Caller(me): Caller,
    Params(p): Params<ListParams>,
) -> ApiResult {
    let page = p.page();
    let q = p
        .query
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "EmptyQuery", "query is required"))?;
    Ok(paged(blocking(&s, move |r| r.search_assets(me, &q, page)).await?))
}
