//! Two-stage like-weighted aggregation of scored top-level comments into a
//! sentiment panel.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::panel::{validate_panel, SentimentPanel};

/// One scored top-level comment together with its post's like count.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct EngagementRecord {
    pub blog_id: String,
    /// One-based period index.
    pub period: usize,
    pub post_id: String,
    pub comment_score: f64,
    pub comment_likes: u64,
    pub post_likes: u64,
}

/// Like-weighted mean of `(score, likes)` pairs. Falls back to the
/// unweighted mean when no item has any likes.
fn weighted_mean(items: &[(f64, u64)]) -> f64 {
    let total: u64 = items.iter().map(|(_, l)| l).sum();
    if total == 0 {
        return items.iter().map(|(s, _)| s).sum::<f64>() / items.len() as f64;
    }
    let num: f64 = items.iter().map(|(s, l)| *l as f64 * s).sum();
    let v = num / total as f64;
    // The quotient of a convex combination can drift one ulp past its inputs.
    let (lo, hi) = items
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (s, _)| {
            (lo.min(*s), hi.max(*s))
        });
    v.clamp(lo, hi)
}

fn check_scores(items: &[(f64, u64)]) -> Result<()> {
    match items.iter().find(|(s, _)| !(0.0..=1.0).contains(s)) {
        Some((s, _)) => Err(Error::InvalidRecord(format!("score {s} outside [0, 1]"))),
        None => Ok(()),
    }
}

/// Sentiment of one post: comment scores weighted by comment likes.
pub fn post_sentiment(comments: &[(f64, u64)]) -> Result<f64> {
    if comments.is_empty() {
        return Err(Error::EmptyCommentSet);
    }
    check_scores(comments)?;
    Ok(weighted_mean(comments))
}

/// Sentiment of one blog in one period: post sentiments weighted by post likes.
pub fn blog_sentiment(posts: &[(f64, u64)]) -> Result<f64> {
    if posts.is_empty() {
        return Err(Error::EmptyPostSet);
    }
    check_scores(posts)?;
    Ok(weighted_mean(posts))
}

/// Orders identifiers with embedded numbers numerically (`blog2 < blog10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    let (ca, cb) = (chunks(a), chunks(b));
    for ((da, sa), (db, sb)) in ca.iter().zip(&cb) {
        let ord = if *da && *db {
            let (ta, tb) = (sa.trim_start_matches('0'), sb.trim_start_matches('0'));
            ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
        } else {
            sa.cmp(sb)
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

#[derive(Default)]
struct PostAcc {
    likes: Option<u64>,
    comments: Vec<(f64, u64)>,
}

/// Aggregates records into a `n_blogs x n_periods` panel.
///
/// Blogs are ordered naturally by id. Within a cell, posts are visited in id
/// order and comments in `(score, likes)` order, so the result does not
/// depend on record order.
pub fn build_panel(records: &[EngagementRecord], n_blogs: usize, n_periods: usize) -> Result<SentimentPanel> {
    let mut cells: BTreeMap<(String, usize), BTreeMap<String, PostAcc>> = BTreeMap::new();
    let mut blogs = BTreeSet::new();
    for r in records {
        if r.period == 0 || r.period > n_periods {
            return Err(Error::InvalidRecord(format!(
                "blog {} has period {} outside 1..={n_periods}",
                r.blog_id, r.period
            )));
        }
        if !(0.0..=1.0).contains(&r.comment_score) {
            return Err(Error::InvalidRecord(format!(
                "comment score {} outside [0, 1] (blog {}, post {})",
                r.comment_score, r.blog_id, r.post_id
            )));
        }
        blogs.insert(r.blog_id.clone());
        let post = cells
            .entry((r.blog_id.clone(), r.period))
            .or_default()
            .entry(r.post_id.clone())
            .or_default();
        match post.likes {
            Some(l) if l != r.post_likes => {
                return Err(Error::InvalidRecord(format!(
                    "post {} of blog {} in period {} has inconsistent like counts {l} and {}",
                    r.post_id, r.blog_id, r.period, r.post_likes
                )))
            }
            _ => post.likes = Some(r.post_likes),
        }
        post.comments.push((r.comment_score, r.comment_likes));
    }

    let mut blog_ids: Vec<String> = blogs.into_iter().collect();
    blog_ids.sort_by(|a, b| natural_cmp(a, b));
    if blog_ids.len() != n_blogs {
        return Err(Error::InvalidRecord(format!(
            "expected {n_blogs} distinct blogs, found {}",
            blog_ids.len()
        )));
    }

    let mut values = Matrix::zeros(n_blogs, n_periods);
    for (b, id) in blog_ids.iter().enumerate() {
        for t in 1..=n_periods {
            let posts = cells.get_mut(&(id.clone(), t)).ok_or_else(|| Error::MissingCell {
                blog: id.clone(),
                period: t,
            })?;
            let mut scored = Vec::with_capacity(posts.len());
            for acc in posts.values_mut() {
                acc.comments.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
                scored.push((post_sentiment(&acc.comments)?, acc.likes.unwrap_or(0)));
            }
            values[(b, t - 1)] = blog_sentiment(&scored)?;
        }
    }
    let periods = (1..=n_periods).map(|t| format!("p{t}")).collect();
    validate_panel(values, blog_ids, periods)
}

/// Number of records per `(blog, period)` cell, keyed by blog id.
pub fn cell_counts(records: &[EngagementRecord]) -> BTreeMap<(String, usize), usize> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry((r.blog_id.clone(), r.period)).or_insert(0) += 1;
    }
    counts
}

/// Reads the records CSV
/// (`blog_id,period,post_id,comment_score,comment_likes,post_likes`).
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<EngagementRecord>> {
    const HEADER: [&str; 6] = [
        "blog_id",
        "period",
        "post_id",
        "comment_score",
        "comment_likes",
        "post_likes",
    ];
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<EngagementRecord>().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Parse {
            line: 2,
            message: "no records".into(),
        });
    }
    Ok(out)
}
