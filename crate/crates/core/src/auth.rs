//! Accounts and bearer-token sessions.
//!
//! Passwords are stored as argon2id PHC strings. Tokens are 32 random bytes,
//! base64url-encoded; only their SHA-256 is persisted. Sessions slide: each
//! successful authentication pushes expiry out to `now + ttl` (at most once a
//! minute, to keep the journal quiet).

use std::sync::OnceLock;

use argon2::password_hash::{PasswordHash, PasswordHasher, PasswordVerifier, SaltString};
use argon2::{Algorithm, Argon2, Params, Version};
use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::store::{Key, Row, SessionRow, StoredUser};
use crate::catalog::Catalog;
use crate::domain::{clean_email, clean_user_name, Timestamp, User, UserId, MIN_PASSWORD_LEN};
use crate::error::{Error, Result};

pub const DEFAULT_TOKEN_TTL_MILLIS: i64 = 24 * 60 * 60 * 1000;
const SLIDE_GRANULARITY_MILLIS: i64 = 60 * 1000;

/// argon2id cost parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordCost {
    pub memory_kib: u32,
    pub iterations: u32,
    pub parallelism: u32,
}

impl Default for PasswordCost {
    fn default() -> Self {
        Self {
            memory_kib: 19 * 1024,
            iterations: 2,
            parallelism: 1,
        }
    }
}

impl PasswordCost {
    /// Minimum argon2 parameters. Only for tests.
    pub fn insecure_fast() -> Self {
        Self {
            memory_kib: 8,
            iterations: 1,
            parallelism: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub token: String,
    pub user: User,
    pub expires_at: Timestamp,
}

pub struct Auth {
    hasher: Argon2<'static>,
    ttl_millis: i64,
    dummy: OnceLock<String>,
}

pub(crate) fn token_digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

impl Auth {
    pub fn new(cost: PasswordCost, ttl_millis: i64) -> Result<Self> {
        let params = Params::new(cost.memory_kib, cost.iterations, cost.parallelism, None)
            .map_err(|e| Error::Validation(format!("password cost: {e}")))?;
        if ttl_millis <= 0 {
            return Err(Error::Validation("token ttl must be positive".into()));
        }
        Ok(Self {
            hasher: Argon2::new(Algorithm::Argon2id, Version::V0x13, params),
            ttl_millis,
            dummy: OnceLock::new(),
        })
    }

    pub fn ttl_millis(&self) -> i64 {
        self.ttl_millis
    }

    fn hash(&self, password: &str) -> Result<String> {
        let salt = SaltString::generate(&mut OsRng);
        self.hasher
            .hash_password(password.as_bytes(), &salt)
            .map(|h| h.to_string())
            .map_err(|e| Error::Storage(format!("password hashing: {e}")))
    }

    fn verify(&self, password: &str, digest: &str) -> bool {
        PasswordHash::new(digest)
            .map(|h| self.hasher.verify_password(password.as_bytes(), &h).is_ok())
            .unwrap_or(false)
    }

    /// Verification target for unknown emails, so both failure paths cost
    /// one argon2 evaluation.
    fn dummy_digest(&self) -> &str {
        self.dummy
            .get_or_init(|| self.hash("unused dummy password").unwrap_or_default())
    }

    pub fn register(
        &self,
        catalog: &Catalog,
        email: &str,
        display_name: &str,
        password: &str,
    ) -> Result<User> {
        let email = clean_email(email).map_err(Error::Validation)?;
        let display_name = clean_user_name(display_name)?;
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(Error::WeakPassword(MIN_PASSWORD_LEN));
        }
        if catalog.read(|s| s.emails.contains_key(&email)) {
            return Err(Error::EmailTaken);
        }
        let digest = self.hash(password)?;
        catalog.write(|tx| {
            if tx.state().emails.contains_key(&email) {
                return Err(Error::EmailTaken);
            }
            let user = User {
                id: UserId::from_uuid(tx.new_uuid()),
                email,
                display_name,
                created_at: tx.now,
            };
            tx.put(Row::User(StoredUser {
                user: user.clone(),
                password_digest: digest,
            }));
            Ok(user)
        })
    }

    pub fn login(&self, catalog: &Catalog, email: &str, password: &str) -> Result<Session> {
        let email = clean_email(email).unwrap_or_default();
        let stored = catalog.read(|s| {
            s.emails
                .get(&email)
                .and_then(|id| s.users.get(id))
                .cloned()
        });
        let ok = match &stored {
            Some(u) => self.verify(password, &u.password_digest),
            None => {
                self.verify(password, self.dummy_digest());
                false
            }
        };
        let Some(stored) = stored.filter(|_| ok) else {
            return Err(Error::InvalidCredentials);
        };

        let mut raw = [0u8; 32];
        OsRng.fill_bytes(&mut raw);
        let token = URL_SAFE_NO_PAD.encode(raw);
        let digest = token_digest(&token);
        let ttl = self.ttl_millis;
        let expires_at = catalog.write(|tx| {
            if !tx.state().users.contains_key(&stored.user.id) {
                return Err(Error::InvalidCredentials);
            }
            let expires_at = tx.now.plus_millis(ttl);
            tx.put(Row::Session(SessionRow {
                digest,
                user: stored.user.id,
                created_at: tx.now,
                expires_at,
            }));
            Ok(expires_at)
        })?;
        Ok(Session {
            token,
            user: stored.user,
            expires_at,
        })
    }

    /// Resolves a bearer token to its user and slides the expiry forward.
    pub fn authenticate(&self, catalog: &Catalog, token: &str) -> Result<UserId> {
        let digest = token_digest(token);
        let now = catalog.clock().now();
        let session = catalog
            .read(|s| s.sessions.get(&digest).cloned())
            .ok_or(Error::InvalidCredentials)?;
        if session.expires_at <= now {
            catalog.write(|tx| {
                tx.delete(Key::Session(digest));
                Ok(())
            })?;
            return Err(Error::ExpiredToken);
        }
        let renewed = now.plus_millis(self.ttl_millis);
        if renewed.as_millis() - session.expires_at.as_millis() >= SLIDE_GRANULARITY_MILLIS {
            catalog.write(|tx| {
                // a concurrent logout wins
                if let Some(current) = tx.state().sessions.get(&digest).cloned() {
                    tx.put(Row::Session(SessionRow {
                        expires_at: renewed,
                        ..current
                    }));
                }
                Ok(())
            })?;
        }
        Ok(session.user)
    }

    /// Revokes a token. Unknown tokens are rejected like in `authenticate`.
    pub fn logout(&self, catalog: &Catalog, token: &str) -> Result<()> {
        let digest = token_digest(token);
        catalog.write(|tx| match tx.delete(Key::Session(digest)) {
            Some(_) => Ok(()),
            None => Err(Error::InvalidCredentials),
        })
    }

    pub fn user(&self, catalog: &Catalog, id: UserId) -> Result<User> {
        catalog.read(|s| {
            s.users
                .get(&id)
                .map(|u| u.user.clone())
                .ok_or_else(|| Error::not_found(format_args!("user {id}")))
        })
    }
}
