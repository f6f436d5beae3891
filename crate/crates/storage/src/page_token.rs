//! Opaque pagination tokens.
//!
//! A token carries the next offset plus a checksum binding it to the query
//! that produced it, so edited or foreign tokens are rejected.

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use sha2::{Digest, Sha256};

use crate::StoreError;

fn check(context: &str, offset: usize) -> String {
    let mut h = Sha256::new();
    h.update(context.as_bytes());
    h.update([0u8]);
    h.update(offset.to_string().as_bytes());
    hex::encode(&h.finalize()[..8])
}

pub fn encode(offset: usize, context: &str) -> String {
    URL_SAFE_NO_PAD.encode(format!("{offset}:{}", check(context, offset)))
}

pub fn decode(token: &str, context: &str) -> Result<usize, StoreError> {
    let invalid = || StoreError::InvalidToken(token.to_string());
    let raw = URL_SAFE_NO_PAD.decode(token).map_err(|_| invalid())?;
    let text = String::from_utf8(raw).map_err(|_| invalid())?;
    let (offset, sum) = text.split_once(':').ok_or_else(invalid)?;
    let offset: usize = offset.parse().map_err(|_| invalid())?;
    if offset.to_string().len() != text.len() - sum.len() - 1 || check(context, offset) != sum {
        return Err(invalid());
    }
    Ok(offset)
}

/// Slice `items` into one page starting at the token's offset.
pub fn paginate<T: Clone>(
    items: &[T],
    max_results: usize,
    page_token: Option<&str>,
    context: &str,
) -> Result<(Vec<T>, Option<String>), StoreError> {
    let start = match page_token {
        Some(t) => decode(t, context)?,
        None => 0,
    };
    if start > items.len() {
        return Err(StoreError::InvalidToken(page_token.unwrap_or_default().to_string()));
    }
    let end = start.saturating_add(max_results).min(items.len());
    let next = (end < items.len()).then(|| encode(end, context));
    Ok((items[start..end].to_vec(), next))
}
