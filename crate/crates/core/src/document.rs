//! JSON interchange helpers. Integers whose magnitude exceeds 2^53 - 1 are
//! written as decimal strings.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serializer};
use serde_json::Value;

const SAFE: i64 = (1 << 53) - 1;

pub fn bigint_to_value(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) if (-SAFE..=SAFE).contains(&v) => Value::from(v),
        _ => Value::String(x.to_string()),
    }
}

pub fn bigint_from_value(v: &Value) -> Result<BigInt, String> {
    match v {
        Value::Number(n) => n
            .as_i64()
            .map(BigInt::from)
            .ok_or_else(|| format!("integer expected, found {n}")),
        Value::String(s) => s.trim().parse::<BigInt>().map_err(|_| format!("integer expected, found {s:?}")),
        other => Err(format!("integer expected, found {other}")),
    }
}

pub mod bigint_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&bigint_to_value(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        let vals = Vec::<Value>::deserialize(d)?;
        vals.iter().map(|v| bigint_from_value(v).map_err(D::Error::custom)).collect()
    }
}

use std::collections::BTreeMap;
use std::sync::Arc;

use serde_json::{json, Map};

use crate::ccomplex::{CComplex, Chirality};
use crate::complex::{GradedMap, ZComplex};
use crate::dgcat::{DgInstance, DistinguishedFamily, RestrictedInstance};
use crate::error::{Error, Result as CoreResult};
use crate::object::{Generator, Letter, Summand, Term};
use crate::pretr::{Choice, PreTrElement, TwistedComplex};
use crate::zmodule::{FgAbGroup, IntMatrix};

pub const VERSION: &str = "1";

pub const KINDS: [&str; 7] = ["complex", "graded_map", "twisted", "cc", "morphism", "family", "suite"];

/// A versioned, kind-tagged JSON document.
#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub version: String,
    pub kind: String,
    pub payload: Value,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

fn field<'a>(v: &'a Value, name: &str) -> CoreResult<&'a Value> {
    v.get(name).ok_or_else(|| bad(format!("missing field {name:?}")))
}

fn int(v: &Value) -> CoreResult<i64> {
    let b = bigint_from_value(v).map_err(bad)?;
    b.to_i64().ok_or_else(|| bad(format!("integer {b} out of range")))
}

fn key_int(k: &str) -> CoreResult<i64> {
    k.trim().parse().map_err(|_| bad(format!("integer key expected, found {k:?}")))
}

fn key_pair(k: &str) -> CoreResult<(i64, i64)> {
    let (a, b) = k.split_once(',').ok_or_else(|| bad(format!("key \"i,j\" expected, found {k:?}")))?;
    Ok((key_int(a)?, key_int(b)?))
}

fn object(v: &Value, what: &str) -> CoreResult<Map<String, Value>> {
    v.as_object().cloned().ok_or_else(|| bad(format!("{what} must be an object")))
}

impl Document {
    pub fn new(kind: &str, payload: Value) -> Self {
        Document { version: VERSION.into(), kind: kind.into(), payload }
    }

    pub fn parse(text: &str) -> CoreResult<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| bad(format!("malformed JSON: {e}")))?;
        Self::from_value(&v)
    }

    pub fn from_value(v: &Value) -> CoreResult<Self> {
        let version = field(v, "version")?.as_str().ok_or_else(|| bad("version must be a string"))?;
        if version != VERSION {
            return Err(bad(format!("unsupported version {version:?}")));
        }
        let kind = field(v, "kind")?.as_str().ok_or_else(|| bad("kind must be a string"))?;
        if !KINDS.contains(&kind) {
            return Err(bad(format!("unknown kind {kind:?}")));
        }
        Ok(Document::new(kind, field(v, "payload")?.clone()))
    }

    pub fn to_value(&self) -> Value {
        json!({"version": self.version, "kind": self.kind, "payload": self.payload})
    }

    pub fn to_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("serializable")
    }

    pub fn expect_kind(&self, kind: &str) -> CoreResult<&Value> {
        if self.kind == kind {
            Ok(&self.payload)
        } else {
            Err(bad(format!("expected a {kind} document, found {}", self.kind)))
        }
    }
}

pub fn matrix_to_value(m: &IntMatrix) -> Value {
    Value::Array(
        (0..m.rows()).map(|r| Value::Array((0..m.cols()).map(|c| bigint_to_value(&m[(r, c)])).collect())).collect(),
    )
}

/// Parses a list of rows; `shape` is checked when given. An empty list is a zero matrix of that shape.
pub fn matrix_from_value(v: &Value, shape: Option<(usize, usize)>) -> CoreResult<IntMatrix> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be a list of rows"))?;
    if rows.is_empty() {
        let (r, c) = shape.unwrap_or((0, 0));
        return Ok(IntMatrix::zeros(r, c));
    }
    let cols = rows[0].as_array().map_or(0, Vec::len);
    let mut data = Vec::with_capacity(rows.len() * cols);
    for row in rows {
        let row = row.as_array().ok_or_else(|| bad("matrix row must be a list"))?;
        if row.len() != cols {
            return Err(bad("matrix rows have different lengths"));
        }
        for x in row {
            data.push(bigint_from_value(x).map_err(bad)?);
        }
    }
    if let Some((r, c)) = shape {
        if (r, c) != (rows.len(), cols) && !(r * c == 0 && data.is_empty()) {
            return Err(Error::Shape(format!("matrix is {}x{}, expected {r}x{c}", rows.len(), cols)));
        }
    }
    IntMatrix::from_vec(rows.len(), cols, data)
}

pub fn complex_to_value(c: &ZComplex) -> Value {
    let (lo, ranks) = match c.support() {
        Some((lo, hi)) => (lo, (lo..=hi).map(|n| c.rank(n)).collect::<Vec<_>>()),
        None => (0, vec![]),
    };
    let d: Map<String, Value> =
        c.differentials().iter().filter(|(_, m)| m.rows() * m.cols() > 0).map(|(n, m)| (n.to_string(), matrix_to_value(m))).collect();
    json!({"lo": lo, "ranks": ranks, "d": d})
}

/// Parses a complex without checking `d∘d = 0`.
pub fn complex_from_value(v: &Value) -> CoreResult<ZComplex> {
    let lo = match v.get("lo") {
        Some(x) => int(x)?,
        None => 0,
    };
    let ranks: Vec<usize> = field(v, "ranks")?
        .as_array()
        .ok_or_else(|| bad("ranks must be a list"))?
        .iter()
        .map(|x| int(x).and_then(|r| usize::try_from(r).map_err(|_| bad("ranks must be nonnegative"))))
        .collect::<CoreResult<_>>()?;
    let rank_map: BTreeMap<i64, usize> = ranks.iter().enumerate().map(|(k, &r)| (lo + k as i64, r)).collect();
    let mut d = BTreeMap::new();
    if let Some(dv) = v.get("d") {
        for (k, m) in object(dv, "d")? {
            let n = key_int(&k)?;
            let shape = (rank_map.get(&(n + 1)).copied().unwrap_or(0), rank_map.get(&n).copied().unwrap_or(0));
            d.insert(n, matrix_from_value(&m, Some(shape))?);
        }
    }
    ZComplex::from_maps(&rank_map, &d)
}

fn blocks_to_value(f: &GradedMap) -> Value {
    let b: Map<String, Value> = f.nonzero_blocks().iter().map(|(d, m)| (d.to_string(), matrix_to_value(m))).collect();
    Value::Object(b)
}

fn blocks_from_value(v: &Value, src: &ZComplex, tgt: &ZComplex, degree: i64) -> CoreResult<BTreeMap<i64, IntMatrix>> {
    let mut out = BTreeMap::new();
    for (k, m) in object(v, "blocks")? {
        let d = key_int(&k)?;
        out.insert(d, matrix_from_value(&m, Some((tgt.rank(d + degree), src.rank(d))))?);
    }
    Ok(out)
}

pub fn graded_map_to_value(f: &GradedMap) -> Value {
    json!({
        "source": complex_to_value(&f.source),
        "target": complex_to_value(&f.target),
        "degree": f.degree,
        "blocks": blocks_to_value(f),
    })
}

pub fn graded_map_from_value(v: &Value) -> CoreResult<GradedMap> {
    let src = Arc::new(complex_from_value(field(v, "source")?)?);
    let tgt = Arc::new(complex_from_value(field(v, "target")?)?);
    let degree = int(field(v, "degree")?)?;
    let blocks = blocks_from_value(field(v, "blocks")?, &src, &tgt, degree)?;
    GradedMap::new(src, tgt, degree, blocks)
}

fn component_to_value(f: &GradedMap) -> Value {
    json!({"degree": f.degree, "blocks": blocks_to_value(f)})
}

fn component_from_value(v: &Value, src: Arc<ZComplex>, tgt: Arc<ZComplex>) -> CoreResult<GradedMap> {
    let degree = int(field(v, "degree")?)?;
    let blocks = blocks_from_value(field(v, "blocks")?, &src, &tgt, degree)?;
    GradedMap::new(src, tgt, degree, blocks)
}

pub fn summand_to_value(s: &Summand) -> Value {
    let word: Vec<Value> = s.word.iter().map(|l| json!([l.generator.name, l.level])).collect();
    let tag: Vec<Value> = s.tag.iter().map(|(i, p)| json!([i, p])).collect();
    json!({"word": word, "weight": s.weight, "tag": tag})
}

fn collect_generators<'a>(summands: impl Iterator<Item = &'a Summand>) -> CoreResult<Map<String, Value>> {
    let mut gens: BTreeMap<String, Arc<Generator>> = BTreeMap::new();
    for s in summands {
        for l in &s.word {
            if let Some(g) = gens.get(&l.generator.name) {
                if **g != *l.generator {
                    return Err(bad(format!("two different generators named {:?}", g.name)));
                }
            } else {
                gens.insert(l.generator.name.clone(), l.generator.clone());
            }
        }
    }
    Ok(gens.into_iter().map(|(n, g)| (n, complex_to_value(&g.complex))).collect())
}

/// Generator table of a document.
pub type Generators = BTreeMap<String, Arc<Generator>>;

pub fn generators_from_value(v: Option<&Value>) -> CoreResult<Generators> {
    let mut out = BTreeMap::new();
    if let Some(v) = v {
        for (name, c) in object(v, "generators")? {
            let c = complex_from_value(&c)?;
            if !c.is_valid() {
                return Err(Error::InvalidComplex(format!("generator {name:?} has d∘d != 0")));
            }
            out.insert(name.clone(), Generator::new(name, c));
        }
    }
    Ok(out)
}

pub fn summand_from_value(v: &Value, gens: &Generators, default_tag: crate::object::Tag) -> CoreResult<Summand> {
    let word = field(v, "word")?
        .as_array()
        .ok_or_else(|| bad("word must be a list"))?
        .iter()
        .map(|l| {
            let (name, level) = match l {
                Value::String(s) => (s.clone(), 0),
                Value::Array(a) if a.len() == 2 => (
                    a[0].as_str().ok_or_else(|| bad("letter name must be a string"))?.to_string(),
                    u32::try_from(int(&a[1])?).map_err(|_| bad("dual level must be nonnegative"))?,
                ),
                _ => return Err(bad("letter must be a name or [name, level]")),
            };
            let g = gens.get(&name).ok_or_else(|| bad(format!("unknown generator {name:?}")))?;
            Ok(Letter::new(g.clone(), level))
        })
        .collect::<CoreResult<Vec<_>>>()?;
    let weight = match v.get("weight") {
        Some(w) => int(w)?,
        None => 0,
    };
    let tag = match v.get("tag") {
        Some(Value::Array(t)) => t
            .iter()
            .map(|p| match p.as_array().map(Vec::as_slice) {
                Some([i, q]) => Ok((int(i)?, u32::try_from(int(q)?).map_err(|_| bad("tag position must be nonnegative"))?)),
                _ => Err(bad("tag entries are [index, position]")),
            })
            .collect::<CoreResult<_>>()?,
        Some(_) => return Err(bad("tag must be a list")),
        None => default_tag,
    };
    Ok(Summand::new(word, weight, tag))
}

pub fn twisted_to_value(a: &TwistedComplex) -> CoreResult<Value> {
    let generators = collect_generators(a.summands().map(|(_, _, s)| s))?;
    let terms: Map<String, Value> = a
        .terms()
        .iter()
        .map(|(i, t)| (i.to_string(), Value::Array(t.summands.iter().map(summand_to_value).collect())))
        .collect();
    let q: Map<String, Value> =
        a.twists().iter().map(|((i, j), m)| (format!("{i},{j}"), component_to_value(m))).collect();
    Ok(json!({"generators": generators, "terms": terms, "q": q}))
}

pub fn twisted_from_value(v: &Value) -> CoreResult<TwistedComplex> {
    let gens = generators_from_value(v.get("generators"))?;
    twisted_from_value_with(v, &gens)
}

pub fn twisted_from_value_with(v: &Value, gens: &Generators) -> CoreResult<TwistedComplex> {
    let mut terms = BTreeMap::new();
    if let Some(tv) = v.get("terms") {
        for (k, list) in object(tv, "terms")? {
            let i = key_int(&k)?;
            let list = list.as_array().ok_or_else(|| bad("a term is a list of summands"))?;
            let summands = list
                .iter()
                .enumerate()
                .map(|(p, s)| summand_from_value(s, gens, vec![(i, p as u32)]))
                .collect::<CoreResult<Vec<_>>>()?;
            terms.insert(i, Term::new(summands));
        }
    }
    let empty = Arc::new(ZComplex::zero());
    let tc = |i: i64| terms.get(&i).map_or_else(|| empty.clone(), |t: &Term| t.complex().clone());
    let mut q = BTreeMap::new();
    if let Some(qv) = v.get("q") {
        for (k, m) in object(qv, "q")? {
            let (i, j) = key_pair(&k)?;
            q.insert((i, j), component_from_value(&m, tc(i), tc(j))?);
        }
    }
    TwistedComplex::new(terms, q)
}

pub fn element_to_value(f: &PreTrElement) -> Value {
    let blocks: Map<String, Value> =
        f.blocks.iter().filter(|(_, m)| !m.is_zero()).map(|((i, j), m)| (format!("{i},{j}"), component_to_value(m))).collect();
    json!({"degree": f.degree, "blocks": blocks})
}

pub fn element_from_value(v: &Value, a: &TwistedComplex, b: &TwistedComplex) -> CoreResult<PreTrElement> {
    let degree = int(field(v, "degree")?)?;
    let mut out = PreTrElement::zero(degree);
    if let Some(bv) = v.get("blocks") {
        for (k, m) in object(bv, "blocks")? {
            let (i, j) = key_pair(&k)?;
            let f = component_from_value(&m, a.term_complex(i), b.term_complex(j))?;
            if f.degree != degree + i - j {
                return Err(Error::Shape(format!("component ({i},{j}) has degree {}, expected {}", f.degree, degree + i - j)));
            }
            out.blocks.insert((i, j), f);
        }
    }
    Ok(out.normalized())
}

/// A morphism document: source, target and an element of the Hom-complex.
pub fn morphism_to_value(a: &TwistedComplex, b: &TwistedComplex, f: &PreTrElement) -> CoreResult<Value> {
    Ok(json!({"source": twisted_to_value(a)?, "target": twisted_to_value(b)?, "element": element_to_value(f)}))
}

pub fn morphism_from_value(v: &Value) -> CoreResult<(TwistedComplex, TwistedComplex, PreTrElement)> {
    let a = twisted_from_value(field(v, "source")?)?;
    let b = twisted_from_value(field(v, "target")?)?;
    let f = element_from_value(field(v, "element")?, &a, &b)?;
    Ok((a, b, f))
}

pub fn ccomplex_to_value(c: &CComplex) -> Value {
    let columns: Map<String, Value> = c.columns().iter().map(|(m, x)| (m.to_string(), complex_to_value(x))).collect();
    let higher: Map<String, Value> =
        c.higher().iter().map(|((m, n), f)| (format!("{m},{n}"), component_to_value(f))).collect();
    json!({"chirality": c.chirality, "columns": columns, "higher": higher})
}

pub fn ccomplex_from_value(v: &Value) -> CoreResult<CComplex> {
    let chirality: Chirality = serde_json::from_value(field(v, "chirality")?.clone())
        .map_err(|_| bad("chirality must be \"left\" or \"right\""))?;
    let mut columns = BTreeMap::new();
    for (k, c) in object(field(v, "columns")?, "columns")? {
        columns.insert(key_int(&k)?, complex_from_value(&c)?);
    }
    let arcs: BTreeMap<i64, Arc<ZComplex>> = columns.iter().map(|(&m, c)| (m, Arc::new(c.clone()))).collect();
    let empty = Arc::new(ZComplex::zero());
    let col = |m: i64| arcs.get(&m).cloned().unwrap_or_else(|| empty.clone());
    let mut higher = BTreeMap::new();
    if let Some(hv) = v.get("higher") {
        for (k, f) in object(hv, "higher")? {
            let (m, n) = key_pair(&k)?;
            higher.insert((m, n), component_from_value(&f, col(m), col(n))?);
        }
    }
    CComplex::new(chirality, columns, higher)
}

/// A restricted instance: `{"generators", "families": [{"source", "target", "degree", "members": [{"id", "cuts"}]}]}`.
pub fn instance_from_value(v: &Value, gens: &Generators) -> CoreResult<DgInstance> {
    let mut fams = Vec::new();
    for f in field(v, "families")?.as_array().ok_or_else(|| bad("families must be a list"))? {
        let s = summand_from_value(field(f, "source")?, gens, vec![])?;
        let t = summand_from_value(field(f, "target")?, gens, vec![])?;
        let n = int(field(f, "degree")?)?;
        let members = field(f, "members")?
            .as_array()
            .ok_or_else(|| bad("members must be a list"))?
            .iter()
            .map(|m| {
                let id = field(m, "id")?.as_str().ok_or_else(|| bad("member id must be a string"))?.to_string();
                let cuts = field(m, "cuts")?
                    .as_array()
                    .ok_or_else(|| bad("cuts must be a list"))?
                    .iter()
                    .map(|c| int(c).and_then(|x| usize::try_from(x).map_err(|_| bad("cuts are nonnegative"))))
                    .collect::<CoreResult<_>>()?;
                Ok((id, cuts))
            })
            .collect::<CoreResult<Vec<_>>>()?;
        let fam = DistinguishedFamily::from_cuts(s, t, n, &members)?;
        fam.certify()?;
        fams.push(fam);
    }
    Ok(DgInstance::Restricted(RestrictedInstance::new(fams)))
}

/// Chooses member `id` for every block whose summand pair has a family containing it.
pub fn choice_for(inst: &DgInstance, a: &TwistedComplex, b: &TwistedComplex, id: &str) -> Choice {
    let mut out = Choice::new();
    for (i, al, s) in a.summands() {
        for (j, be, t) in b.summands() {
            if let Some(fam) = inst.family(s, t) {
                if fam.member(id).is_ok() {
                    out.insert((i, al, j, be), id.to_string());
                }
            }
        }
    }
    out
}

pub fn group_to_value(g: &FgAbGroup) -> Value {
    json!({"free": g.free, "torsion": g.torsion.iter().map(bigint_to_value).collect::<Vec<_>>()})
}

/// `{"n": group}` over the degrees with a nonzero group.
pub fn homology_to_value(h: &BTreeMap<i64, FgAbGroup>) -> Value {
    let m: Map<String, Value> =
        h.iter().filter(|(_, g)| !g.is_zero()).map(|(n, g)| (n.to_string(), group_to_value(g))).collect();
    Value::Object(m)
}
