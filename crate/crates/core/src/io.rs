//! Tree and kernel specifications: JSON documents and one-line shorthands.
//!
//! A tree spec is either JSON such as
//! `{"type":"finite","children":[3,0,0,0]}` or
//! `{"type":"lazy","family":"complete","arity":2}`, or a shorthand:
//! `line`, `two_rays`, `complete:2` (lazy), `complete:2:3` (finite, height 3),
//! `comb:2`, `path:5`, `star4`, `bfs:3,0,0,0`.
//!
//! A kernel spec is JSON with a `family` field, e.g.
//! `{"family":"explicit","rows":[["1/20","1/4","1/5","1/2"],...]}`, or a
//! shorthand `family:key=value,...` such as `bd:down=2/3`,
//! `walk:up=9/23,child=7/23`, `geometric:p=1/2`, `leafjump:p=1/4`,
//! `z:plus=2/3`, `height:down=2/3,q=1/2`, `degree:f=1/2|1/2|1/2,g=0|1/4|1/4`,
//! `uniform` or `star4`. Numbers are `a/b` strings or decimals; decimals are
//! read exactly.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::fixtures;
use crate::gw::OffspringLaw;
use crate::kernel::{HomogeneousParams, Kernel};
use crate::scalar::{parse_q, parse_scalar, Scalar, Q};
use crate::sternbrocot::TransitionFamily;
use crate::tree::{FiniteTree, NodeWord, TreeSource};

/// Why a spec argument could not be turned into a document.
#[derive(Debug)]
pub enum SpecError {
    /// The argument itself is unusable: a missing file or an unknown shorthand.
    Usage(String),
    /// The document was read but is malformed.
    Invalid(Error),
}

fn looks_like_file(arg: &str) -> bool {
    arg.ends_with(".json") || arg.ends_with(".kernel") || arg.ends_with(".tree") || Path::new(arg).is_file()
}

/// Reads `arg` as a JSON file when it names one, otherwise as a shorthand.
pub fn read_spec(arg: &str, shorthand: fn(&str) -> Result<Value>) -> std::result::Result<Value, SpecError> {
    if looks_like_file(arg) {
        let text = std::fs::read_to_string(arg).map_err(|e| SpecError::Usage(format!("cannot read {arg}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| SpecError::Invalid(Error::Parse(format!("{arg}: {e}"))));
    }
    if arg.trim_start().starts_with('{') {
        return serde_json::from_str(arg).map_err(|e| SpecError::Invalid(Error::Parse(e.to_string())));
    }
    shorthand(arg).map_err(|e| SpecError::Usage(e.to_string()))
}

fn small_int(text: &str, what: &str) -> Result<u64> {
    text.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("{what} must be a non-negative integer, got {text:?}")))
}

/// Shorthand tree spec to its JSON form.
pub fn tree_shorthand(arg: &str) -> Result<Value> {
    let mut parts = arg.trim().splitn(2, ':');
    let head = parts.next().unwrap_or("");
    let rest = parts.next();
    let v = match (head, rest) {
        ("line", None) | ("two_rays", None) => json!({"type": "lazy", "family": head}),
        ("star4", None) => json!({"type": "finite", "family": "star4"}),
        ("complete", Some(r)) => match r.split_once(':') {
            None => json!({"type": "lazy", "family": "complete", "arity": small_int(r, "arity")?}),
            Some((a, h)) => json!({
                "type": "finite", "family": "complete",
                "arity": small_int(a, "arity")?, "height": small_int(h, "height")?
            }),
        },
        ("comb", Some(r)) => json!({"type": "lazy", "family": "comb", "arity": small_int(r, "arity")?}),
        ("path", Some(r)) => json!({"type": "finite", "family": "path", "nodes": small_int(r, "nodes")?}),
        ("bfs", Some(r)) => {
            let counts = r
                .split(',')
                .map(|c| small_int(c, "child count"))
                .collect::<Result<Vec<_>>>()?;
            json!({"type": "finite", "children": counts})
        }
        _ => return Err(Error::Parse(format!("unknown tree shorthand {arg:?}"))),
    };
    Ok(v)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::Parse(format!("missing field {key:?}")))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str> {
    field(v, key)?
        .as_str()
        .ok_or_else(|| Error::Parse(format!("field {key:?} must be a string")))
}

fn uint_field(v: &Value, key: &str, default: Option<u64>) -> Result<u64> {
    match v.get(key) {
        None => default.ok_or_else(|| Error::Parse(format!("missing field {key:?}"))),
        Some(x) => match x {
            Value::Number(n) => n.as_u64(),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
        .ok_or_else(|| Error::Parse(format!("field {key:?} must be a non-negative integer"))),
    }
}

fn rational(x: &Value) -> Result<Q> {
    match x {
        Value::String(s) => parse_q(s),
        Value::Number(n) => parse_q(&n.to_string()),
        _ => Err(Error::Parse(format!("expected a number, got {x}"))),
    }
}

fn num_field(v: &Value, key: &str) -> Result<Option<Q>> {
    v.get(key).map(rational).transpose()
}

fn list_field(v: &Value, key: &str) -> Result<Vec<Q>> {
    field(v, key)?
        .as_array()
        .ok_or_else(|| Error::Parse(format!("field {key:?} must be an array")))?
        .iter()
        .map(rational)
        .collect()
}

fn arity_of(v: &Value, default: u64) -> Result<u32> {
    let a = uint_field(v, "arity", Some(default))?;
    if a == 0 || a > 64 {
        return Err(Error::InvalidTree(format!("arity {a} outside 1..=64")));
    }
    Ok(a as u32)
}

pub fn build_tree(v: &Value) -> Result<TreeSource> {
    let kind = v.get("type").and_then(Value::as_str).unwrap_or("finite");
    let family = v.get("family").and_then(Value::as_str);
    match (kind, family) {
        ("finite", None) => {
            if let Some(c) = v.get("children") {
                let counts = c
                    .as_array()
                    .ok_or_else(|| Error::Parse("children must be an array".into()))?
                    .iter()
                    .map(|x| {
                        x.as_u64()
                            .and_then(|n| u32::try_from(n).ok())
                            .ok_or_else(|| Error::Parse(format!("bad child count {x}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                return Ok(TreeSource::finite(FiniteTree::from_bfs_counts(counts)?));
            }
            let words = field(v, "words")?
                .as_array()
                .ok_or_else(|| Error::Parse("words must be an array".into()))?
                .iter()
                .map(|w| {
                    w.as_str()
                        .ok_or_else(|| Error::Parse(format!("bad word {w}")))?
                        .parse::<NodeWord>()
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TreeSource::finite(FiniteTree::from_words(words)?))
        }
        ("finite", Some("star4")) => Ok(TreeSource::finite(fixtures::star4_tree())),
        ("finite", Some("path")) => {
            let n = uint_field(v, "nodes", None)? as usize;
            if n == 0 {
                return Err(Error::InvalidTree("a path needs at least one node".into()));
            }
            Ok(TreeSource::finite(FiniteTree::path(n)))
        }
        ("finite", Some("complete")) => {
            let h = uint_field(v, "height", None)? as usize;
            Ok(TreeSource::finite(FiniteTree::complete(arity_of(v, 2)?, h)))
        }
        ("lazy", Some("line")) => Ok(TreeSource::line()),
        ("lazy", Some("two_rays")) => Ok(TreeSource::two_rays()),
        ("lazy", Some("complete")) => Ok(TreeSource::complete(arity_of(v, 2)?)),
        ("lazy", Some("comb")) => Ok(fixtures::comb(arity_of(v, 2)?)),
        _ => Err(Error::Parse(format!("unknown tree spec {v}"))),
    }
}

/// Shorthand kernel spec to its JSON form.
pub fn kernel_shorthand(arg: &str) -> Result<Value> {
    let (head, rest) = match arg.trim().split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (arg.trim(), None),
    };
    let family = match head {
        "bd" | "birth_death" => "birth_death",
        "walk" => "walk",
        "uniform" => "uniform",
        "geometric" => "geometric",
        "leafjump" | "leaf_jump" => "leaf_jump",
        "height" => "height",
        "degree" => "degree",
        "z" | "z_walk" => "z_walk",
        "star4" => "star4",
        _ => return Err(Error::Parse(format!("unknown kernel shorthand {arg:?}"))),
    };
    let mut m = Map::new();
    m.insert("family".into(), Value::from(family));
    for pair in rest.into_iter().flat_map(|r| r.split(',')).filter(|p| !p.trim().is_empty()) {
        let (k, val) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))?;
        let (k, val) = (k.trim(), val.trim());
        let entry = if family == "degree" && (k == "f" || k == "g") {
            Value::from(val.split('|').map(|s| Value::from(s.trim())).collect::<Vec<_>>())
        } else {
            Value::from(val)
        };
        m.insert(k.into(), entry);
    }
    Ok(Value::Object(m))
}

fn same_tree(a: &TreeSource, b: &TreeSource) -> bool {
    match (a.as_finite(), b.as_finite()) {
        (Some(x), Some(y)) => x == y,
        (None, None) => a.describe() == b.describe(),
        _ => false,
    }
}

fn finite_tree(tree: Option<&TreeSource>, family: &str) -> Result<FiniteTree> {
    tree.and_then(TreeSource::as_finite)
        .cloned()
        .ok_or_else(|| Error::InvalidTree(format!("the {family} family needs a finite tree")))
}

/// Trees of the families that carry their own tree; a given tree must agree.
fn intrinsic(tree: Option<&TreeSource>, own: TreeSource, family: &str) -> Result<TreeSource> {
    match tree {
        Some(t) if !same_tree(t, &own) => Err(Error::InvalidTree(format!(
            "the {family} family lives on {}, not {}",
            own.describe(),
            t.describe()
        ))),
        _ => Ok(own),
    }
}

fn need(x: Option<Q>, key: &str) -> Result<Q> {
    x.ok_or_else(|| Error::Parse(format!("missing parameter {key:?}")))
}

fn conv<T: Scalar>(x: &Q) -> T {
    T::from_q(x)
}

/// Builds the kernel of a spec on `tree`; families with a natural tree use
/// it when `tree` is `None`.
pub fn build_kernel<T: Scalar>(v: &Value, tree: Option<&TreeSource>) -> Result<Kernel<T>> {
    let family = str_field(v, "family")?;
    let one = Q::from_integer(1.into());
    match family {
        "explicit" => {
            let t = finite_tree(tree, family)?;
            let rows = field(v, "rows")?
                .as_array()
                .ok_or_else(|| Error::Parse("rows must be an array".into()))?
                .iter()
                .map(|r| {
                    r.as_array()
                        .ok_or_else(|| Error::Parse("each row must be an array".into()))?
                        .iter()
                        .map(|x| rational(x).map(|q| conv(&q)))
                        .collect::<Result<Vec<T>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            Kernel::explicit(t, rows)
        }
        "uniform" => Ok(Kernel::uniform(finite_tree(tree, family)?)),
        "geometric" => Kernel::geometric(finite_tree(tree, family)?, conv(&need(num_field(v, "p")?, "p")?)),
        "leaf_jump" => {
            let arity = arity_of(v, 2)?;
            let t = tree.cloned().unwrap_or_else(|| fixtures::comb(arity));
            Kernel::leaf_jump(t, conv(&need(num_field(v, "p")?, "p")?), arity)
        }
        "height" => {
            let arity = arity_of(v, 2)?;
            let range = uint_field(v, "range", Some(8))? as usize;
            let chain = fixtures::height_chain::<T>(
                conv(&need(num_field(v, "down")?, "down")?),
                conv(&need(num_field(v, "q")?, "q")?),
                range,
            );
            let t = tree.cloned().unwrap_or_else(|| TreeSource::complete(arity));
            Kernel::height_driven(t, chain, arity)
        }
        "walk" => {
            let t = tree.cloned().unwrap_or_else(|| TreeSource::complete(2));
            let up = need(num_field(v, "up")?, "up")?;
            let child = need(num_field(v, "child")?, "child")?;
            Ok(Kernel::homogeneous_walk(t, conv(&up), conv(&child)))
        }
        "birth_death" => {
            intrinsic(tree, TreeSource::line(), family)?;
            let (up, down) = match (num_field(v, "up")?, num_field(v, "down")?) {
                (Some(u), Some(d)) => (u, d),
                (Some(u), None) => (u.clone(), &one - u),
                (None, Some(d)) => (&one - &d, d),
                (None, None) => return Err(Error::Parse("birth_death needs up or down".into())),
            };
            Ok(Kernel::birth_death(conv(&up), conv(&down)))
        }
        "z_walk" => {
            intrinsic(tree, TreeSource::two_rays(), family)?;
            Ok(fixtures::biased_z_walk(conv(&need(num_field(v, "plus")?, "plus")?)))
        }
        "star4" => {
            intrinsic(tree, TreeSource::finite(fixtures::star4_tree()), family)?;
            Ok(fixtures::star4())
        }
        "degree" => {
            let t = tree.cloned().unwrap_or_else(|| TreeSource::complete(2));
            let f = list_field(v, "f")?.iter().map(conv).collect();
            let g = list_field(v, "g")?.iter().map(conv).collect();
            Kernel::degree_homogeneous(t, HomogeneousParams { f, g })
        }
        _ => Err(Error::Parse(format!("unknown kernel family {family:?}"))),
    }
}

/// The tree a kernel spec implies when no tree is given.
pub fn default_tree(kernel: &Value) -> Option<TreeSource> {
    match kernel.get("family").and_then(Value::as_str)? {
        "star4" => Some(TreeSource::finite(fixtures::star4_tree())),
        "birth_death" => Some(TreeSource::line()),
        "z_walk" => Some(TreeSource::two_rays()),
        _ => None,
    }
}

/// `0:1/2,2:1/2` to an offspring law.
pub fn parse_law(text: &str) -> Result<OffspringLaw> {
    let mut probs: Vec<Q> = Vec::new();
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, p) = pair
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected degree:probability, got {pair:?}")))?;
        let k = small_int(k, "degree")? as usize;
        if k > 1024 {
            return Err(Error::InvalidLaw(format!("degree {k} is too large")));
        }
        if probs.len() <= k {
            probs.resize(k + 1, Q::from_integer(0.into()));
        }
        probs[k] += parse_q(p)?;
    }
    OffspringLaw::new(probs)
}

/// `k:v,...` (missing degrees are 0) or a single value for every degree
/// up to `max_degree`.
pub fn parse_degree_values<T: Scalar>(text: &str, max_degree: u32) -> Result<Vec<T>> {
    if !text.contains(':') {
        let x: T = parse_scalar(text)?;
        return Ok(vec![x; max_degree as usize + 1]);
    }
    let mut out = vec![T::zero(); max_degree as usize + 1];
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, x) = pair
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected degree:value, got {pair:?}")))?;
        let k = small_int(k, "degree")? as usize;
        if k >= out.len() {
            out.resize(k + 1, T::zero());
        }
        out[k] = parse_scalar(x)?;
    }
    Ok(out)
}

/// `r=1/4,l=1/4,p=1/2` (missing moves are 0, staying takes the rest).
pub fn parse_family(text: &str) -> Result<TransitionFamily> {
    let (mut r, mut l, mut p) = (0.0, 0.0, 0.0);
    for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, x) = pair
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {pair:?}")))?;
        let x: f64 = parse_scalar(x)?;
        match k.trim() {
            "r" => r = x,
            "l" => l = x,
            "p" => p = x,
            "s" => {}
            other => return Err(Error::Parse(format!("unknown move {other:?}"))),
        }
    }
    TransitionFamily::constant(r, l, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn shorthands_round_trip_through_json() {
        let t = build_tree(&tree_shorthand("complete:2:3").unwrap()).unwrap();
        assert_eq!(t.as_finite().unwrap().len(), 15);
        let t = build_tree(&tree_shorthand("bfs:3,0,0,0").unwrap()).unwrap();
        assert_eq!(t.as_finite(), Some(&fixtures::star4_tree()));
        assert_eq!(build_tree(&tree_shorthand("line").unwrap()).unwrap().describe(), "line");
        assert!(tree_shorthand("hexagon").is_err());
    }

    #[test]
    fn explicit_rows_parse_exactly() {
        let v = json!({"family": "explicit", "rows": [
            ["1/20", "1/4", "1/5", "1/2"],
            ["1/3", "2/3", 0, 0],
            ["1/3", 0, "2/3", 0],
            ["1/3", 0, 0, "2/3"]
        ]});
        let t = TreeSource::finite(fixtures::star4_tree());
        let k = build_kernel::<Q>(&v, Some(&t)).unwrap();
        let a = NodeWord::root();
        assert_eq!(k.weight(&a, &NodeWord::new(vec![2])), q(1, 2));
        assert_eq!(k.weight(&NodeWord::new(vec![0]), &NodeWord::new(vec![0])), q(2, 3));
    }

    #[test]
    fn birth_death_fills_the_missing_side() {
        let v = kernel_shorthand("bd:down=2/3").unwrap();
        let k = build_kernel::<Q>(&v, None).unwrap();
        let u = NodeWord::new(vec![0]);
        assert_eq!(k.parent_weight(&u), q(2, 3));
        assert_eq!(k.weight(&u, &u.child(0)), q(1, 3));
        let wrong = TreeSource::complete(2);
        assert!(build_kernel::<Q>(&v, Some(&wrong)).is_err());
        assert!(build_kernel::<Q>(&v, Some(&TreeSource::line())).is_ok());
    }

    #[test]
    fn families_need_compatible_trees() {
        let uniform = kernel_shorthand("uniform").unwrap();
        assert!(build_kernel::<Q>(&uniform, Some(&TreeSource::line())).is_err());
        let lj = kernel_shorthand("leafjump:p=1/4").unwrap();
        assert!(build_kernel::<Q>(&lj, Some(&TreeSource::finite(FiniteTree::path(3)))).is_err());
        assert!(build_kernel::<Q>(&lj, None).is_ok());
        let deg = kernel_shorthand("degree:f=1/2|1/2|1/2,g=0|1/4|1/4").unwrap();
        assert!(build_kernel::<f64>(&deg, None).is_ok());
    }

    #[test]
    fn laws_and_degree_lists() {
        let law = parse_law("0:1/2,2:1/2").unwrap();
        assert_eq!(law.max_degree(), 2);
        assert!(parse_law("0:1/2,1:1/2").is_err());
        let g: Vec<Q> = parse_degree_values("1:1/2,2:1/4", 2).unwrap();
        assert_eq!(g, vec![q(0, 1), q(1, 2), q(1, 4)]);
        let f: Vec<Q> = parse_degree_values("1/2", 2).unwrap();
        assert_eq!(f.len(), 3);
        assert!(parse_family("r=1/4,l=1/4,p=1/2").is_ok());
        assert!(parse_family("r=1/2,l=1/2,p=1/2").is_err());
    }

    #[test]
    fn missing_files_are_usage_errors() {
        match read_spec("/nonexistent/kernel.json", kernel_shorthand) {
            Err(SpecError::Usage(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
        match read_spec("{not json", kernel_shorthand) {
            Err(SpecError::Invalid(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
