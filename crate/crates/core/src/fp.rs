//! Polynomials over F_p, ascending coefficients without trailing zeros.

fn trim(mut v: Vec<u64>) -> Vec<u64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

pub fn inv(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

pub fn normalize(v: &[u64], p: u64) -> Vec<u64> {
    trim(v.iter().map(|c| c % p).collect())
}

pub fn degree(v: &[u64]) -> Option<usize> {
    v.len().checked_sub(1)
}

pub fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let n = a.len().max(b.len());
    let at = |v: &[u64], i: usize| v.get(i).copied().unwrap_or(0);
    trim((0..n).map(|i| (at(a, i) + p - at(b, i)) % p).collect())
}

pub fn mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
        }
    }
    trim(out)
}

pub fn derivative(a: &[u64], p: u64) -> Vec<u64> {
    trim(a.iter().enumerate().skip(1).map(|(i, &c)| mulmod(c, i as u64 % p, p)).collect())
}

pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let db = degree(b).expect("division by zero");
    let lead_inv = inv(b[db], p);
    let mut r = a.to_vec();
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = mulmod(r[dr], lead_inv, p);
        for (j, &bc) in b.iter().enumerate() {
            let k = dr - db + j;
            r[k] = (r[k] + p - mulmod(c, bc, p)) % p;
        }
        r = trim(r);
    }
    r
}

pub fn monic(a: &[u64], p: u64) -> Vec<u64> {
    match a.last() {
        None => Vec::new(),
        Some(&l) => {
            let li = inv(l, p);
            a.iter().map(|&c| mulmod(c, li, p)).collect()
        }
    }
}

pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    monic(&a, p)
}

pub fn div_exact(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let db = degree(b).expect("division by zero");
    let lead_inv = inv(b[db], p);
    let mut r = a.to_vec();
    let mut q = vec![0u64; a.len().saturating_sub(db)];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let c = mulmod(r[dr], lead_inv, p);
        q[dr - db] = c;
        for (j, &bc) in b.iter().enumerate() {
            let k = dr - db + j;
            r[k] = (r[k] + p - mulmod(c, bc, p)) % p;
        }
        r = trim(r);
    }
    debug_assert!(r.is_empty(), "inexact division");
    trim(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_and_division() {
        let p = 5;
        // (x - 1)(x + 1) and (x - 1)(x + 2) over F_5
        let a = mul(&[4, 1], &[1, 1], p);
        let b = mul(&[4, 1], &[2, 1], p);
        assert_eq!(gcd(&a, &b, p), vec![4, 1]);
        assert_eq!(div_exact(&a, &[4, 1], p), vec![1, 1]);
        assert_eq!(derivative(&[0, 0, 0, 1], 3), Vec::<u64>::new());
        assert_eq!(sub(&[1, 2], &[1, 2], 7), Vec::<u64>::new());
    }
}
