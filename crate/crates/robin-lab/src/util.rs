//! Small shared plumbing: deterministic RNG, float formatting, hashing,
//! 2D vector helpers and a minimal JSON writer.
//!
//! Everything here is dependency-free and bit-reproducible across runs,
//! which the output contracts of the CLI rely on.

/// SplitMix64 generator. Deterministic, platform independent, good enough
/// for seeding property checks and solver start vectors.
#[derive(Clone, Debug)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (-1, 1), symmetric.
    pub fn next_sym(&mut self) -> f64 {
        2.0 * self.next_f64() - 1.0
    }

    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Formats a float with 17 significant digits, the fixed interchange format
/// of every text artifact written by this crate. Round-trips f64 exactly.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // normalize -0.0 so identical values print identically
        return "0.0000000000000000e0".to_string();
    }
    format!("{:.16e}", x)
}

/// FNV-1a 64-bit hash, used to derive run-directory names from config text.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// 2D vector helpers on [f64; 2]
// ---------------------------------------------------------------------------

pub type Pt = [f64; 2];

#[inline]
pub fn sub(a: Pt, b: Pt) -> Pt {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add(a: Pt, b: Pt) -> Pt {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale(a: Pt, s: f64) -> Pt {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Pt, b: Pt) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// z-component of the cross product a x b.
#[inline]
pub fn cross(a: Pt, b: Pt) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Pt) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Pt, b: Pt) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Unit direction (cos t, sin t).
#[inline]
pub fn unit(theta: f64) -> Pt {
    [theta.cos(), theta.sin()]
}

/// Counterclockwise perpendicular of the unit direction, (-sin t, cos t).
#[inline]
pub fn unit_perp(theta: f64) -> Pt {
    [-theta.sin(), theta.cos()]
}

/// Signed area of triangle (a, b, c); positive when counterclockwise.
#[inline]
pub fn tri_area(a: Pt, b: Pt, c: Pt) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

// ---------------------------------------------------------------------------
// Minimal JSON writer
// ---------------------------------------------------------------------------

/// JSON value with insertion-ordered objects. Floats are written with
/// [`fmt17`] so JSON and CSV artifacts share one number format.
#[derive(Clone, Debug)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj() -> Json {
        Json::Obj(Vec::new())
    }

    pub fn push(&mut self, key: &str, v: Json) {
        match self {
            Json::Obj(entries) => entries.push((key.to_string(), v)),
            _ => panic!("push on non-object Json"),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s
    }

    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => out.push_str(&i.to_string()),
            Json::Num(x) => {
                if x.is_finite() {
                    out.push_str(&fmt17(*x));
                } else {
                    // JSON has no inf/nan; encode as strings to stay parseable
                    out.push('"');
                    out.push_str(&format!("{x}"));
                    out.push('"');
                }
            }
            Json::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    v.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push(']');
            }
            Json::Obj(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (k, v)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&"  ".repeat(indent + 1));
                    out.push('"');
                    out.push_str(k);
                    out.push_str("\": ");
                    v.write(out, indent + 1);
                }
                out.push('\n');
                out.push_str(&"  ".repeat(indent));
                out.push('}');
            }
        }
    }
}
