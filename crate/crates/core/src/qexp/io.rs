//! JSON file format for q-expansions.
//!
//! ```json
//! { "weight_num": 3, "level": 64,
//!   "character": { "modulus": 64, "values": [[1, 0, 1], [3, 0, 1], ...] },
//!   "offset_num": 1, "offset_den": 1,
//!   "coefficients": ["1", "0", "-3/2", ...], "precision": 30,
//!   "cuspidal": true }
//! ```
//!
//! `values` lists `[residue, numerator, order]` for each unit residue, meaning
//! `e^{2πi·numerator/order}`. `cuspidal` is optional.

use std::path::Path;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::Zero;
use serde_json::{json, Map, Value};

use super::QExpansion;
use crate::error::{Error, Result};
use crate::modular::{DirichletCharacter, RootOfUnity, Weight};

fn schema(field: &str, msg: impl Into<String>) -> Error {
    Error::Schema {
        field: field.to_string(),
        msg: msg.into(),
    }
}

fn get_int(obj: &Map<String, Value>, field: &str) -> Result<i64> {
    obj.get(field)
        .ok_or_else(|| schema(field, "missing"))?
        .as_i64()
        .ok_or_else(|| schema(field, "expected an integer"))
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            (!q.is_zero()).then(|| BigRational::new(p, q))
        }
    }
}

fn parse_character(v: &Value) -> Result<DirichletCharacter> {
    let obj = v.as_object().ok_or_else(|| schema("character", "expected an object"))?;
    let modulus = get_int(obj, "modulus").map_err(|_| schema("character.modulus", "expected a positive integer"))?;
    if modulus <= 0 {
        return Err(schema("character.modulus", "must be positive"));
    }
    let rows = obj
        .get("values")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("character.values", "expected an array"))?;
    let mut table = vec![None; modulus as usize];
    for (i, row) in rows.iter().enumerate() {
        let field = format!("character.values[{i}]");
        let r: Vec<i64> = row
            .as_array()
            .filter(|a| a.len() == 3)
            .and_then(|a| a.iter().map(Value::as_i64).collect())
            .ok_or_else(|| schema(&field, "expected [residue, numerator, order]"))?;
        if r[0] < 0 || r[0] >= modulus || r[2] <= 0 {
            return Err(schema(&field, "residue or order out of range"));
        }
        table[r[0] as usize] = Some(RootOfUnity::new(r[1], r[2] as u32));
    }
    DirichletCharacter::from_table(modulus as u64, table).map_err(|e| schema("character.values", e.to_string()))
}

/// Parses and validates a q-expansion document.
pub fn form_from_json(v: &Value) -> Result<QExpansion> {
    let obj = v.as_object().ok_or_else(|| schema("<root>", "expected an object"))?;
    let weight_num = get_int(obj, "weight_num")?;
    let level = get_int(obj, "level")?;
    if level <= 0 {
        return Err(schema("level", "must be positive"));
    }
    let character = parse_character(obj.get("character").ok_or_else(|| schema("character", "missing"))?)?;
    let offset_num = get_int(obj, "offset_num")?;
    let offset_den = get_int(obj, "offset_den")?;
    if offset_den <= 0 || 24 % offset_den != 0 {
        return Err(schema("offset_den", "must be a positive divisor of 24"));
    }
    if offset_num < 0 {
        return Err(schema("offset_num", "offset must be nonnegative"));
    }
    let precision = get_int(obj, "precision")?;
    let coeffs = obj
        .get("coefficients")
        .ok_or_else(|| schema("coefficients", "missing"))?
        .as_array()
        .ok_or_else(|| schema("coefficients", "expected an array of strings"))?;
    if precision <= 0 || coeffs.len() as i64 != precision {
        return Err(schema(
            "precision",
            format!("precision {precision} does not match {} coefficients", coeffs.len()),
        ));
    }
    let mut parsed = Vec::with_capacity(coeffs.len());
    for (i, c) in coeffs.iter().enumerate() {
        let field = format!("coefficients[{i}]");
        let s = c.as_str().ok_or_else(|| schema(&field, "expected a string \"p/q\""))?;
        parsed.push(parse_rational(s).ok_or_else(|| schema(&field, format!("{s:?} is not a rational")))?);
    }
    if weight_num % 2 != 0 && level % 4 != 0 {
        return Err(schema("level", "half-integral weight requires level divisible by 4"));
    }
    if level as u64 % character.modulus() != 0 {
        return Err(schema("character.modulus", "must divide the level"));
    }
    let character = character.lift(level as u64)?;
    let f = QExpansion::new(
        Ratio::new(offset_num, offset_den),
        parsed,
        Weight::from_twice(weight_num as i32),
        level as u64,
        character,
    )?;
    if obj.get("cuspidal").and_then(Value::as_bool) == Some(true) && !f.is_cuspidal() {
        return Err(schema("coefficients[0]", "form claims to be cuspidal but a(0) ≠ 0"));
    }
    Ok(f)
}

pub fn form_to_json(f: &QExpansion) -> Value {
    let rows: Vec<Value> = f.character().table().iter().map(|r| json!(r)).collect();
    json!({
        "weight_num": f.weight().twice,
        "level": f.level(),
        "character": { "modulus": f.character().modulus(), "values": rows },
        "offset_num": f.offset().numer(),
        "offset_den": f.offset().denom(),
        "coefficients": f.dense_coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "precision": f.precision(),
        "cuspidal": f.is_cuspidal(),
    })
}

pub fn load_form(path: &Path) -> Result<QExpansion> {
    let text = std::fs::read_to_string(path)?;
    let v: Value = serde_json::from_str(&text)?;
    form_from_json(&v)
}

pub fn save_form(f: &QExpansion, path: &Path) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(&form_to_json(f))?)?;
    Ok(())
}
