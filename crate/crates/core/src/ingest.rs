//! Loading LastFM and MovieLens style dumps into preference matrices, plus
//! the per-matrix transforms the experiments need: row normalization, sign
//! extraction, popularity and random removal of observed entries.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Which normalization has been applied to a [`PreferenceMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    RowL1,
    RowL2,
    ColumnUnit,
}

/// Users x items preference matrix with external identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct PreferenceMatrix {
    matrix: DenseMatrix,
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    normalization: Normalization,
}

impl PreferenceMatrix {
    pub fn new(
        matrix: DenseMatrix,
        user_ids: Vec<String>,
        item_ids: Vec<String>,
        normalization: Normalization,
    ) -> Result<Self> {
        check_ids("user ids", &user_ids, matrix.rows())?;
        check_ids("item ids", &item_ids, matrix.cols())?;
        Ok(PreferenceMatrix {
            matrix,
            user_ids,
            item_ids,
            normalization,
        })
    }

    /// Wraps a bare matrix with positional ids `"0"`, `"1"`, ...
    pub fn from_matrix(matrix: DenseMatrix) -> Self {
        let user_ids = (0..matrix.rows()).map(|i| i.to_string()).collect();
        let item_ids = (0..matrix.cols()).map(|j| j.to_string()).collect();
        PreferenceMatrix {
            matrix,
            user_ids,
            item_ids,
            normalization: Normalization::Raw,
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn shape(&self) -> (usize, usize) {
        self.matrix.shape()
    }

    fn with_matrix(&self, matrix: DenseMatrix, normalization: Normalization) -> Self {
        PreferenceMatrix {
            matrix,
            user_ids: self.user_ids.clone(),
            item_ids: self.item_ids.clone(),
            normalization,
        }
    }
}

fn check_ids(what: &'static str, ids: &[String], expected: usize) -> Result<()> {
    if ids.len() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found: ids.len(),
        });
    }
    let mut seen = HashSet::with_capacity(ids.len());
    if let Some(dup) = ids.iter().find(|id| !seen.insert(id.as_str())) {
        return Err(Error::InvalidArgument(format!(
            "duplicate {what} entry {dup:?}"
        )));
    }
    Ok(())
}

/// Sidecar describing the rows and columns of a matrix written to CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdsSidecar {
    pub user_ids: Vec<String>,
    pub item_ids: Vec<String>,
    pub normalization: Normalization,
}

impl From<&PreferenceMatrix> for IdsSidecar {
    fn from(x: &PreferenceMatrix) -> Self {
        IdsSidecar {
            user_ids: x.user_ids.clone(),
            item_ids: x.item_ids.clone(),
            normalization: x.normalization,
        }
    }
}

impl IdsSidecar {
    pub fn attach(self, matrix: DenseMatrix) -> Result<PreferenceMatrix> {
        PreferenceMatrix::new(matrix, self.user_ids, self.item_ids, self.normalization)
    }
}

/// Elementwise sign of a matrix, entries in {-1, 0, +1}.
#[derive(Clone, Debug, PartialEq)]
pub struct SignMatrix {
    matrix: DenseMatrix,
}

impl SignMatrix {
    /// Accepts a matrix whose entries are already exactly -1, 0 or 1.
    pub fn from_matrix(matrix: DenseMatrix) -> Result<Self> {
        if let Some(pos) = matrix
            .as_slice()
            .iter()
            .position(|&v| v != 0.0 && v != 1.0 && v != -1.0)
        {
            return Err(Error::InvalidArgument(format!(
                "sign matrix entry at ({}, {}) is {}",
                pos / matrix.cols(),
                pos % matrix.cols(),
                matrix.as_slice()[pos]
            )));
        }
        Ok(SignMatrix { matrix })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }
}

pub fn sign_of(x: &DenseMatrix) -> SignMatrix {
    let matrix = x.map(|v| {
        if v > 0.0 {
            1.0
        } else if v < 0.0 {
            -1.0
        } else {
            0.0
        }
    });
    SignMatrix { matrix }
}

/// Column sums.
pub fn popularity(x: &DenseMatrix) -> Vec<f64> {
    x.column_sums()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowNorm {
    #[default]
    L1,
    L2,
}

/// Divides every row by its L1 (sum of absolute values) or L2 norm.
pub fn row_normalize(x: &PreferenceMatrix, norm: RowNorm) -> Result<PreferenceMatrix> {
    let m = x.matrix();
    let mut data = m.as_slice().to_vec();
    for (i, row) in data.chunks_mut(m.cols()).enumerate() {
        let scale = match norm {
            RowNorm::L1 => row.iter().map(|v| v.abs()).sum::<f64>(),
            RowNorm::L2 => row.iter().map(|v| v * v).sum::<f64>().sqrt(),
        };
        if scale == 0.0 {
            return Err(Error::ZeroRow {
                user: x.user_ids[i].clone(),
            });
        }
        for v in row.iter_mut() {
            *v /= scale;
        }
    }
    let tag = match norm {
        RowNorm::L1 => Normalization::RowL1,
        RowNorm::L2 => Normalization::RowL2,
    };
    Ok(x.with_matrix(DenseMatrix::new(m.rows(), m.cols(), data)?, tag))
}

/// Zeroes exactly `round(alpha * nnz)` nonzero entries chosen uniformly
/// without replacement. Deterministic in `(x, alpha, seed)`.
pub fn remove_entries(x: &DenseMatrix, alpha: f64, seed: u64) -> Result<DenseMatrix> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!(
            "removal fraction {alpha} outside [0, 1)"
        )));
    }
    let nonzero: Vec<usize> = x
        .as_slice()
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, _)| i)
        .collect();
    let k = (alpha * nonzero.len() as f64).round() as usize;
    let mut data = x.as_slice().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pick in rand::seq::index::sample(&mut rng, nonzero.len(), k) {
        data[nonzero[pick]] = 0.0;
    }
    DenseMatrix::new(x.rows(), x.cols(), data)
}

pub fn remove_entries_pref(
    x: &PreferenceMatrix,
    alpha: f64,
    seed: u64,
) -> Result<PreferenceMatrix> {
    Ok(x.with_matrix(remove_entries(x.matrix(), alpha, seed)?, x.normalization))
}

/// Filter thresholds for the LastFM `user_artists.dat` dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LastFmOptions {
    /// Minimum number of distinct users listing an artist.
    pub min_artist_listeners: usize,
    /// Minimum total listening count over the surviving artists.
    pub min_user_total: f64,
}

impl Default for LastFmOptions {
    fn default() -> Self {
        LastFmOptions {
            min_artist_listeners: 50,
            min_user_total: 20.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovieLensOptions {
    pub per_genre: usize,
    pub top_users: usize,
}

impl Default for MovieLensOptions {
    fn default() -> Self {
        MovieLensOptions {
            per_genre: 30,
            top_users: 2000,
        }
    }
}

/// Counts recorded while filtering a raw dump.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub raw_users: usize,
    pub raw_items: usize,
    pub raw_entries: usize,
    pub kept_users: usize,
    pub kept_items: usize,
    pub kept_entries: usize,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_id(path: &Path, line: usize, field: &str, what: &str) -> Result<u64> {
    field
        .trim()
        .parse::<u64>()
        .map_err(|_| parse_err(path, line, format!("invalid {what}: {field:?}")))
}

/// Reads `user_artists.dat`: a header line then `userID<TAB>artistID<TAB>weight`.
///
/// Artists are filtered first (distinct listeners), then users (total count
/// over surviving artists); each filter runs exactly once.
pub fn load_lastfm(path: &Path, opts: &LastFmOptions) -> Result<(PreferenceMatrix, FilterStats)> {
    let file = std::fs::File::open(path)?;
    parse_lastfm(file, path, opts)
}

pub fn parse_lastfm<R: Read>(
    reader: R,
    path: &Path,
    opts: &LastFmOptions,
) -> Result<(PreferenceMatrix, FilterStats)> {
    let mut entries: BTreeMap<(u64, u64), f64> = BTreeMap::new();
    let reader = BufReader::new(reader);
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if idx == 0 {
            continue;
        }
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let user = parse_id(path, line_no, fields[0], "userID")?;
        let artist = parse_id(path, line_no, fields[1], "artistID")?;
        let weight: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line_no, format!("invalid weight: {:?}", fields[2])))?;
        if !weight.is_finite() || weight <= 0.0 {
            return Err(parse_err(
                path,
                line_no,
                format!("weight must be positive, got {weight}"),
            ));
        }
        if entries.insert((user, artist), weight).is_some() {
            return Err(parse_err(
                path,
                line_no,
                format!("duplicate entry for user {user}, artist {artist}"),
            ));
        }
    }

    let mut stats = FilterStats {
        raw_entries: entries.len(),
        ..FilterStats::default()
    };
    let mut listeners: BTreeMap<u64, usize> = BTreeMap::new();
    let mut users: BTreeSet<u64> = BTreeSet::new();
    for &(user, artist) in entries.keys() {
        *listeners.entry(artist).or_default() += 1;
        users.insert(user);
    }
    stats.raw_users = users.len();
    stats.raw_items = listeners.len();

    let artists: Vec<u64> = listeners
        .iter()
        .filter(|(_, &count)| count >= opts.min_artist_listeners)
        .map(|(&a, _)| a)
        .collect();
    if artists.is_empty() {
        return Err(Error::EmptyResult { what: "artist" });
    }
    let artist_col: HashMap<u64, usize> =
        artists.iter().enumerate().map(|(j, &a)| (a, j)).collect();

    let mut totals: BTreeMap<u64, f64> = BTreeMap::new();
    for (&(user, artist), &w) in &entries {
        if artist_col.contains_key(&artist) {
            *totals.entry(user).or_default() += w;
        }
    }
    let kept_users: Vec<u64> = users
        .iter()
        .copied()
        .filter(|u| totals.get(u).copied().unwrap_or(0.0) >= opts.min_user_total)
        .collect();
    if kept_users.is_empty() {
        return Err(Error::EmptyResult { what: "user" });
    }
    let user_row: HashMap<u64, usize> = kept_users
        .iter()
        .enumerate()
        .map(|(i, &u)| (u, i))
        .collect();

    let d = artists.len();
    let mut data = vec![0.0; kept_users.len() * d];
    for (&(user, artist), &w) in &entries {
        if let (Some(&i), Some(&j)) = (user_row.get(&user), artist_col.get(&artist)) {
            data[i * d + j] = w;
            stats.kept_entries += 1;
        }
    }
    stats.kept_users = kept_users.len();
    stats.kept_items = d;
    let matrix = DenseMatrix::new(kept_users.len(), d, data)?;
    let pref = PreferenceMatrix::new(
        matrix,
        kept_users.iter().map(u64::to_string).collect(),
        artists.iter().map(u64::to_string).collect(),
        Normalization::Raw,
    )?;
    Ok((pref, stats))
}

/// Rating remap 1..=5 -> {-2, -1, 1, 2, 3}.
pub fn remap_rating(rating: u8) -> Option<f64> {
    match rating {
        1 => Some(-2.0),
        2 => Some(-1.0),
        3 => Some(1.0),
        4 => Some(2.0),
        5 => Some(3.0),
        _ => None,
    }
}

/// Lines of a possibly Latin-1 encoded file.
fn lossy_lines<R: Read>(mut reader: R) -> Result<Vec<String>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    Ok(bytes
        .split(|&b| b == b'\n')
        .map(|l| {
            String::from_utf8_lossy(l)
                .trim_end_matches('\r')
                .to_string()
        })
        .collect())
}

/// Reads MovieLens-1M `ratings.dat` and `movies.dat` (`::`-separated).
///
/// Genres are visited in lexicographic order; each contributes its top
/// `per_genre` movies by rating count (ties to the smaller movie id), and
/// movies picked by several genres appear once. The `top_users` users with
/// the most ratings over the selected movies are kept.
pub fn load_movielens(
    ratings_path: &Path,
    movies_path: &Path,
    opts: &MovieLensOptions,
) -> Result<(PreferenceMatrix, FilterStats)> {
    let ratings = std::fs::File::open(ratings_path)?;
    let movies = std::fs::File::open(movies_path)?;
    parse_movielens(ratings, ratings_path, movies, movies_path, opts)
}

pub fn parse_movielens<R1: Read, R2: Read>(
    ratings: R1,
    ratings_path: &Path,
    movies: R2,
    movies_path: &Path,
    opts: &MovieLensOptions,
) -> Result<(PreferenceMatrix, FilterStats)> {
    let mut genres: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut known_movies = HashSet::new();
    for (idx, line) in lossy_lines(movies)?.into_iter().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id_part, rest) = line
            .split_once("::")
            .ok_or_else(|| parse_err(movies_path, line_no, "expected MovieID::Title::Genres"))?;
        let (_title, genre_part) = rest
            .rsplit_once("::")
            .ok_or_else(|| parse_err(movies_path, line_no, "expected MovieID::Title::Genres"))?;
        let movie = parse_id(movies_path, line_no, id_part, "MovieID")?;
        if !known_movies.insert(movie) {
            return Err(parse_err(
                movies_path,
                line_no,
                format!("duplicate movie {movie}"),
            ));
        }
        for genre in genre_part
            .split('|')
            .map(str::trim)
            .filter(|g| !g.is_empty())
        {
            genres.entry(genre.to_string()).or_default().push(movie);
        }
    }

    let mut entries: BTreeMap<(u64, u64), u8> = BTreeMap::new();
    for (idx, line) in lossy_lines(ratings)?.into_iter().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("::").collect();
        if fields.len() != 4 {
            return Err(parse_err(
                ratings_path,
                line_no,
                format!("expected 4 '::'-separated fields, found {}", fields.len()),
            ));
        }
        let user = parse_id(ratings_path, line_no, fields[0], "UserID")?;
        let movie = parse_id(ratings_path, line_no, fields[1], "MovieID")?;
        let rating: u8 = fields[2]
            .trim()
            .parse()
            .ok()
            .filter(|r| (1..=5).contains(r))
            .ok_or_else(|| {
                parse_err(
                    ratings_path,
                    line_no,
                    format!("invalid rating {:?}", fields[2]),
                )
            })?;
        parse_id(ratings_path, line_no, fields[3], "Timestamp")?;
        if entries.insert((user, movie), rating).is_some() {
            return Err(parse_err(
                ratings_path,
                line_no,
                format!("duplicate rating for user {user}, movie {movie}"),
            ));
        }
    }

    let mut stats = FilterStats {
        raw_entries: entries.len(),
        ..FilterStats::default()
    };
    let mut movie_counts: HashMap<u64, usize> = HashMap::new();
    let mut all_users = BTreeSet::new();
    for &(user, movie) in entries.keys() {
        *movie_counts.entry(movie).or_default() += 1;
        all_users.insert(user);
    }
    stats.raw_users = all_users.len();
    stats.raw_items = movie_counts.len();

    let mut selected: BTreeSet<u64> = BTreeSet::new();
    for members in genres.values() {
        let mut ranked: Vec<(usize, u64)> = members
            .iter()
            .filter_map(|m| movie_counts.get(m).map(|&c| (c, *m)))
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        selected.extend(ranked.iter().take(opts.per_genre).map(|&(_, m)| m));
    }
    if selected.is_empty() {
        return Err(Error::EmptyResult { what: "movie" });
    }

    let mut user_counts: BTreeMap<u64, usize> = BTreeMap::new();
    for &(user, movie) in entries.keys() {
        if selected.contains(&movie) {
            *user_counts.entry(user).or_default() += 1;
        }
    }
    let mut ranked_users: Vec<(usize, u64)> = user_counts.iter().map(|(&u, &c)| (c, u)).collect();
    ranked_users.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut users: Vec<u64> = ranked_users
        .into_iter()
        .take(opts.top_users)
        .map(|(_, u)| u)
        .collect();
    if users.is_empty() {
        return Err(Error::EmptyResult { what: "user" });
    }
    users.sort_unstable();

    let items: Vec<u64> = selected.into_iter().collect();
    let item_col: HashMap<u64, usize> = items.iter().enumerate().map(|(j, &m)| (m, j)).collect();
    let user_row: HashMap<u64, usize> = users.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let d = items.len();
    let mut data = vec![0.0; users.len() * d];
    for (&(user, movie), &rating) in &entries {
        if let (Some(&i), Some(&j)) = (user_row.get(&user), item_col.get(&movie)) {
            data[i * d + j] = remap_rating(rating).expect("rating validated on parse");
            stats.kept_entries += 1;
        }
    }
    stats.kept_users = users.len();
    stats.kept_items = d;
    let pref = PreferenceMatrix::new(
        DenseMatrix::new(users.len(), d, data)?,
        users.iter().map(u64::to_string).collect(),
        items.iter().map(u64::to_string).collect(),
        Normalization::Raw,
    )?;
    Ok((pref, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn lastfm_text(rows: &[(u64, u64, f64)]) -> String {
        let mut s = String::from("userID\tartistID\tweight\n");
        for (u, a, w) in rows {
            s.push_str(&format!("{u}\t{a}\t{w}\n"));
        }
        s
    }

    #[test]
    fn lastfm_drops_artist_below_threshold() {
        let text = lastfm_text(&[(1, 10, 5.0), (2, 10, 7.0), (1, 20, 3.0)]);
        let opts = LastFmOptions {
            min_artist_listeners: 2,
            min_user_total: 0.0,
        };
        let (x, stats) = parse_lastfm(text.as_bytes(), Path::new("ua.dat"), &opts).unwrap();
        assert_eq!(x.item_ids(), ["10"]);
        assert_eq!(x.user_ids(), ["1", "2"]);
        assert_eq!(x.matrix().as_slice(), &[5.0, 7.0]);
        assert_eq!(stats.raw_items, 2);
        assert_eq!(stats.kept_items, 1);
    }

    /// Hand enumeration of the two filter passes on a 5 x 4 fixture with
    /// thresholds (2 listeners, total >= 3):
    ///   artist listeners: A=4, B=1, C=2, D=1 -> keep A, C
    ///   user totals over {A, C}: u1=1+2=3, u2=1, u3=5, u4=0, u5=4 -> keep u1, u3, u5
    #[test]
    fn lastfm_two_pass_filter_on_fixture() {
        let rows = [
            (1, 100, 1.0),
            (1, 300, 2.0),
            (1, 200, 9.0),
            (2, 100, 1.0),
            (3, 100, 5.0),
            (4, 400, 8.0),
            (5, 100, 1.0),
            (5, 300, 3.0),
        ];
        let opts = LastFmOptions {
            min_artist_listeners: 2,
            min_user_total: 3.0,
        };
        let text = lastfm_text(&rows);
        let (x, stats) = parse_lastfm(text.as_bytes(), Path::new("ua.dat"), &opts).unwrap();
        assert_eq!(x.shape(), (3, 2));
        assert_eq!(x.user_ids(), ["1", "3", "5"]);
        assert_eq!(x.item_ids(), ["100", "300"]);
        assert_eq!(
            x.matrix().to_rows(),
            vec![vec![1.0, 2.0], vec![5.0, 0.0], vec![1.0, 3.0]]
        );
        assert_eq!(stats.raw_users, 5);
        assert_eq!(stats.kept_entries, 5);
    }

    #[test]
    fn lastfm_parse_errors_carry_line_numbers() {
        let text = "userID\tartistID\tweight\n1\t2\t3\n1,2,3\n";
        let err = parse_lastfm(
            text.as_bytes(),
            Path::new("ua.dat"),
            &LastFmOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let text = "h\n1\t2\t0\n";
        let err = parse_lastfm(
            text.as_bytes(),
            Path::new("ua.dat"),
            &LastFmOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn lastfm_empty_result() {
        let text = lastfm_text(&[(1, 10, 5.0)]);
        let err = parse_lastfm(
            text.as_bytes(),
            Path::new("ua.dat"),
            &LastFmOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyResult { what: "artist" }));
    }

    const MOVIES: &str = "1::Toy Story (1995)::Animation|Children's|Comedy\n\
                          2::Jumanji (1995)::Adventure|Children's\n\
                          3::Heat (1995)::Action|Crime\n\
                          4::Sabrina (1995)::Comedy|Romance\n";

    #[test]
    fn movielens_dedups_and_remaps() {
        // Counts: movie1 = 3, movie2 = 1, movie3 = 2, movie4 = 1.
        let ratings =
            "1::1::5::0\n2::1::3::0\n3::1::1::0\n1::2::2::0\n2::3::4::0\n3::3::4::0\n3::4::3::0\n";
        let opts = MovieLensOptions {
            per_genre: 1,
            top_users: 10,
        };
        let (x, stats) = parse_movielens(
            ratings.as_bytes(),
            Path::new("ratings.dat"),
            MOVIES.as_bytes(),
            Path::new("movies.dat"),
            &opts,
        )
        .unwrap();
        // Action->3, Adventure->2, Animation->1, Children's->1 (dup), Comedy->1 (dup),
        // Crime->3 (dup), Romance->4.
        assert_eq!(x.item_ids(), ["1", "2", "3", "4"]);
        assert_eq!(stats.kept_items, 4);
        assert_eq!(
            x.matrix().to_rows(),
            vec![
                vec![3.0, -1.0, 0.0, 0.0],
                vec![1.0, 0.0, 2.0, 0.0],
                vec![-2.0, 0.0, 2.0, 1.0],
            ]
        );
    }

    #[test]
    fn movielens_top_users_and_ties() {
        let ratings = "1::1::5::0\n2::1::3::0\n2::3::3::0\n3::3::1::0\n";
        let opts = MovieLensOptions {
            per_genre: 1,
            top_users: 2,
        };
        let (x, _) = parse_movielens(
            ratings.as_bytes(),
            Path::new("r"),
            MOVIES.as_bytes(),
            Path::new("m"),
            &opts,
        )
        .unwrap();
        // User 2 has two ratings; users 1 and 3 tie with one, the smaller id wins.
        assert_eq!(x.user_ids(), ["1", "2"]);
    }

    #[test]
    fn movielens_rejects_bad_separator() {
        let ratings = "1,1,5,0\n";
        let err = parse_movielens(
            ratings.as_bytes(),
            Path::new("r"),
            MOVIES.as_bytes(),
            Path::new("m"),
            &MovieLensOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn rating_three_maps_to_one_and_signs_follow_raw_rating() {
        assert_eq!(remap_rating(3), Some(1.0));
        for r in 1..=5u8 {
            let v = remap_rating(r).unwrap();
            assert_eq!(v < 0.0, r <= 2);
        }
        assert_eq!(remap_rating(0), None);
    }

    #[test]
    fn row_normalize_examples() {
        let x = PreferenceMatrix::from_matrix(DenseMatrix::from_rows(&[[2.0, 2.0, 0.0]]).unwrap());
        let y = row_normalize(&x, RowNorm::L1).unwrap();
        assert_eq!(y.matrix().as_slice(), &[0.5, 0.5, 0.0]);
        assert_eq!(y.normalization(), Normalization::RowL1);
        let z = row_normalize(&y, RowNorm::L1).unwrap();
        for (a, b) in z.matrix().as_slice().iter().zip(y.matrix().as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }
        let zero = PreferenceMatrix::from_matrix(DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap());
        assert!(matches!(
            row_normalize(&zero, RowNorm::L1),
            Err(Error::ZeroRow { user }) if user == "1"
        ));
        let l2 = row_normalize(
            &PreferenceMatrix::from_matrix(DenseMatrix::from_rows(&[[3.0, 4.0]]).unwrap()),
            RowNorm::L2,
        )
        .unwrap();
        assert_eq!(l2.matrix().as_slice(), &[0.6, 0.8]);
    }

    #[test]
    fn row_normalize_random_rows_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data = (0..40).map(|_| rng.random_range(0.01..5.0)).collect();
        let x = PreferenceMatrix::from_matrix(DenseMatrix::new(10, 4, data).unwrap());
        let y = row_normalize(&x, RowNorm::L1).unwrap();
        for i in 0..10 {
            let s: f64 = y.matrix().row(i).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn sign_examples() {
        let x = DenseMatrix::from_rows(&[[2.0, -3.0], [0.0, 1.0]]).unwrap();
        assert_eq!(
            sign_of(&x).matrix().to_rows(),
            vec![vec![1.0, -1.0], vec![0.0, 1.0]]
        );
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(sign_of(&z).matrix(), &z);
        assert!(SignMatrix::from_matrix(x).is_err());
    }

    #[test]
    fn popularity_examples() {
        assert_eq!(popularity(&DenseMatrix::identity(3)), vec![1.0, 1.0, 1.0]);
        let x = DenseMatrix::from_rows(&[[1.0, 0.0], [2.0, 0.0]]).unwrap();
        assert_eq!(popularity(&x), vec![3.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let data: Vec<f64> = (0..35).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = DenseMatrix::new(7, 5, data.clone()).unwrap();
        let pop = popularity(&x);
        for j in 0..5 {
            let mut s = 0.0;
            for i in 0..7 {
                s += data[i * 5 + j];
            }
            assert_eq!(pop[j], s);
        }
    }

    #[test]
    fn remove_entries_examples() {
        let data: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { (i + 1) as f64 } else { 0.0 })
            .collect();
        let x = DenseMatrix::new(4, 5, data).unwrap();
        assert_eq!(x.count_nonzero(), 10);
        assert_eq!(remove_entries(&x, 0.0, 3).unwrap(), x);
        let half = remove_entries(&x, 0.5, 3).unwrap();
        assert_eq!(half.count_nonzero(), 5);
        assert_eq!(remove_entries(&x, 0.5, 3).unwrap(), half);
        assert!(remove_entries(&x, 1.0, 3).is_err());
        assert!(remove_entries(&x, -0.1, 3).is_err());
    }

    proptest! {
        #[test]
        fn sign_is_idempotent(data in proptest::collection::vec(-3.0f64..3.0, 12)) {
            let x = DenseMatrix::new(3, 4, data).unwrap();
            let s = sign_of(&x);
            prop_assert_eq!(sign_of(s.matrix()), s);
        }

        #[test]
        fn removal_never_creates_or_alters_entries(
            data in proptest::collection::vec(prop_oneof![Just(0.0), -5.0f64..5.0], 30),
            alpha in 0.0f64..0.99,
            seed in any::<u64>(),
        ) {
            let x = DenseMatrix::new(5, 6, data).unwrap();
            let y = remove_entries(&x, alpha, seed).unwrap();
            let expected_removed = (alpha * x.count_nonzero() as f64).round() as usize;
            prop_assert_eq!(x.count_nonzero() - y.count_nonzero(), expected_removed);
            for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
                prop_assert!(*b == 0.0 || a.to_bits() == b.to_bits());
            }
        }
    }
}
