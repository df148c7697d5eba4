use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;

use crate::dataset::Manifest;
use crate::error::{Error, Result};

/// `p` distinct identities, `k` samples each, as indices into `labels`.
/// Identities with fewer than `k` samples are drawn with replacement.
pub fn pk_sample_labels<R: Rng + ?Sized>(
    labels: &[u32],
    p: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        groups.entry(y).or_default().push(i);
    }
    if groups.len() < p {
        return Err(Error::InvalidInput(format!(
            "PK sampling needs {p} identities, only {} available",
            groups.len()
        )));
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    let mut out = Vec::with_capacity(p * k);
    for g in index::sample(rng, groups.len(), p) {
        let members = &groups[g];
        if members.len() >= k {
            out.extend(index::sample(rng, members.len(), k).into_iter().map(|j| members[j]));
        } else {
            out.extend((0..k).map(|_| members[rng.random_range(0..members.len())]));
        }
    }
    Ok(out)
}

pub fn pk_sample<R: Rng + ?Sized>(
    manifest: &Manifest,
    p: usize,
    k: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let labels: Vec<u32> = manifest.records.iter().map(|r| r.identity).collect();
    pk_sample_labels(&labels, p, k, rng)
}
