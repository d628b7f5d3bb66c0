//! Monomial tables for truncated multivariate polynomial arithmetic.
//!
//! Monomials over a fixed variable group are enumerated degree-major
//! (all monomials of total degree d before degree d+1, lexicographic
//! within a degree). The enumeration for a lower degree cap is a prefix
//! of the enumeration for a higher one, so tables built once at the
//! highest degree serve every truncation level.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const NO_MONO: u32 = u32::MAX;

pub struct Ring {
    pub nvars: usize,
    pub maxdeg: usize,
    /// Exponent vectors, `nvars` entries per monomial.
    exps: Vec<u8>,
    /// `offsets[d]` = first index of the degree-d block; last entry = count.
    offsets: Vec<usize>,
    /// Dense product table `count x count`; `NO_MONO` past the cap.
    prod: Vec<u32>,
    /// `raise[k*count + i]` = index of monomial i with exponent of var k
    /// bumped by one, or `NO_MONO`.
    raise: Vec<u32>,
    /// Product of exponent factorials per monomial.
    fact: Vec<f64>,
    index: HashMap<Vec<u8>, u32>,
}

impl Ring {
    fn build(nvars: usize, maxdeg: usize) -> Ring {
        let mut exps: Vec<u8> = Vec::new();
        let mut offsets = vec![0usize];
        let mut scratch = vec![0u8; nvars];
        for d in 0..=maxdeg {
            gen_degree(&mut exps, &mut scratch, nvars, 0, d as u8);
            offsets.push(exps.len() / nvars);
            let _ = d;
        }
        let count = exps.len() / nvars;
        let mut index = HashMap::with_capacity(count);
        for i in 0..count {
            index.insert(exps[i * nvars..(i + 1) * nvars].to_vec(), i as u32);
        }
        let mut prod = vec![NO_MONO; count * count];
        let mut sum = vec![0u8; nvars];
        for i in 0..count {
            for j in 0..count {
                let mut deg = 0usize;
                for k in 0..nvars {
                    sum[k] = exps[i * nvars + k] + exps[j * nvars + k];
                    deg += sum[k] as usize;
                }
                if deg <= maxdeg {
                    prod[i * count + j] = index[&sum];
                }
            }
        }
        let mut raise = vec![NO_MONO; nvars * count];
        for i in 0..count {
            for k in 0..nvars {
                let mut up = exps[i * nvars..(i + 1) * nvars].to_vec();
                up[k] += 1;
                if let Some(&ix) = index.get(&up) {
                    raise[k * count + i] = ix;
                }
            }
        }
        let mut fact = vec![1.0f64; count];
        for i in 0..count {
            let mut f = 1.0;
            for k in 0..nvars {
                f *= factorial(exps[i * nvars + k]);
            }
            fact[i] = f;
        }
        Ring {
            nvars,
            maxdeg,
            exps,
            offsets,
            prod,
            raise,
            fact,
            index,
        }
    }

    #[inline]
    pub fn count_at(&self, deg: usize) -> usize {
        self.offsets[deg.min(self.maxdeg) + 1]
    }

    #[inline]
    pub fn count(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    #[inline]
    pub fn block(&self, d: usize) -> std::ops::Range<usize> {
        self.offsets[d]..self.offsets[d + 1]
    }

    #[inline]
    pub fn prod_idx(&self, i: usize, j: usize) -> u32 {
        self.prod[i * self.count() + j]
    }

    #[inline]
    pub fn prod_flat(&self) -> &[u32] {
        &self.prod
    }

    #[inline]
    pub fn raise_idx(&self, var: usize, i: usize) -> u32 {
        self.raise[var * self.count() + i]
    }

    #[inline]
    pub fn exp(&self, mono: usize, var: usize) -> u8 {
        self.exps[mono * self.nvars + var]
    }

    #[inline]
    pub fn exps_of(&self, mono: usize) -> &[u8] {
        &self.exps[mono * self.nvars..(mono + 1) * self.nvars]
    }

    #[inline]
    pub fn factorial_of(&self, mono: usize) -> f64 {
        self.fact[mono]
    }

    pub fn index_of(&self, exps: &[u8]) -> Option<u32> {
        self.index.get(exps).copied()
    }

    /// Index of the degree-1 monomial of variable `k`.
    pub fn var_mono(&self, k: usize) -> usize {
        let mut e = vec![0u8; self.nvars];
        e[k] = 1;
        self.index[&e] as usize
    }
}

fn gen_degree(out: &mut Vec<u8>, scratch: &mut [u8], nvars: usize, at: usize, remaining: u8) {
    if at == nvars - 1 {
        scratch[at] = remaining;
        out.extend_from_slice(scratch);
        return;
    }
    for e in (0..=remaining).rev() {
        scratch[at] = e;
        gen_degree(out, scratch, nvars, at + 1, remaining - e);
    }
}

fn factorial(k: u8) -> f64 {
    (1..=k as u64).product::<u64>() as f64
}

fn cache() -> &'static Mutex<HashMap<(usize, usize), Arc<Ring>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Ring>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

thread_local! {
    static LOCAL_CACHE: std::cell::RefCell<HashMap<(usize, usize), Arc<Ring>>> =
        std::cell::RefCell::new(HashMap::new());
}

/// Shared ring for `nvars` variables truncated at total degree `maxdeg`.
/// Hot path for every evaluation, so reads go through a thread-local
/// mirror of the global cache.
pub fn ring(nvars: usize, maxdeg: usize) -> Arc<Ring> {
    LOCAL_CACHE.with(|local| {
        if let Some(r) = local.borrow().get(&(nvars, maxdeg)) {
            return r.clone();
        }
        let r = {
            let mut map = cache().lock().unwrap();
            map.entry((nvars, maxdeg))
                .or_insert_with(|| Arc::new(Ring::build(nvars, maxdeg)))
                .clone()
        };
        local.borrow_mut().insert((nvars, maxdeg), r.clone());
        r
    })
}
