//! Warehouse allocation repair.

/// Accepted store replenishment for one period.
///
/// `requests` and `proposed` are `(N, K)` store-major, `warehouse` is `(K,)`.
/// Each proposal is first capped by its request. When the capped total for
/// a product exceeds warehouse stock, the stock is split proportionally:
/// shares are floored and the leftover units go one at a time to the
/// largest fractional remainders, lower store index first on ties.
pub fn resolve_allocation(requests: &[i64], proposed: &[i64], warehouse: &[i64]) -> Vec<i64> {
    let mut accepted = vec![0; requests.len()];
    resolve_allocation_into(requests, proposed, warehouse, &mut accepted);
    accepted
}

pub fn resolve_allocation_into(
    requests: &[i64],
    proposed: &[i64],
    warehouse: &[i64],
    accepted: &mut [i64],
) {
    let k = warehouse.len();
    debug_assert_eq!(requests.len(), proposed.len());
    debug_assert_eq!(requests.len(), accepted.len());
    debug_assert_eq!(requests.len() % k, 0);

    for ((a, &r), &p) in accepted.iter_mut().zip(requests).zip(proposed) {
        *a = p.min(r);
    }

    let n = requests.len() / k;
    let mut totals = vec![0i64; k];
    for row in accepted.chunks_exact(k) {
        for (t, &a) in totals.iter_mut().zip(row) {
            *t += a;
        }
    }
    if totals.iter().zip(warehouse).all(|(t, s)| t <= s) {
        return;
    }
    // Product-major, so each product's repair scans one contiguous run.
    let mut remainders = vec![0i64; k * n];
    let mut granted = vec![0i64; k];
    for (v, row) in accepted.chunks_exact_mut(k).enumerate() {
        for p in 0..k {
            let (stock, total) = (warehouse[p], totals[p]);
            if total > stock {
                let (share, r) = mul_div(row[p], stock, total);
                remainders[p * n + v] = r;
                granted[p] += share;
                row[p] = share;
            }
        }
    }
    for (p, rems) in remainders.chunks_exact_mut(n).enumerate() {
        if totals[p] <= warehouse[p] {
            continue;
        }
        // The leftover is below the number of non-zero remainders, so each
        // pass finds a fresh one. Strict comparison keeps the lower index.
        for _ in 0..warehouse[p] - granted[p] {
            let mut best = 0;
            for (v, &r) in rems.iter().enumerate().skip(1) {
                if r > rems[best] {
                    best = v;
                }
            }
            rems[best] = -1;
            accepted[best * k + p] += 1;
        }
    }
}

/// `(floor(a * b / d), a * b mod d)` for non-negative `a`, `b` and positive
/// `d`, exact for all inputs.
fn mul_div(a: i64, b: i64, d: i64) -> (i64, i64) {
    const EXACT: i64 = 1 << 53;
    match a.checked_mul(b) {
        Some(x) if x < EXACT => {
            // The float quotient is off by at most one.
            let q = (x as f64 / d as f64) as i64;
            let r = x - q * d;
            if r < 0 {
                (q - 1, r + d)
            } else if r >= d {
                (q + 1, r - d)
            } else {
                (q, r)
            }
        }
        Some(x) => (x / d, x % d),
        None => {
            let x = a as i128 * b as i128;
            ((x / d as i128) as i64, (x % d as i128) as i64)
        }
    }
}
