//! Episode trace export.
//!
//! One row per `(t, vertex, product)` for every completed period. Store rows
//! carry customer demand and sales; the warehouse row (vertex 0) carries the
//! total store requests as its demand and the total accepted shipments as
//! its sales.

use std::io::{self, Write};

use crate::tables::{EnvTables, STORE};

pub const TRACE_HEADER: &str =
    "t,vertex,product,on_hand,in_transit,requested,accepted,demand,sales,reward_shared";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub vertex: usize,
    pub product: usize,
    pub on_hand: i64,
    pub in_transit: i64,
    pub requested: i64,
    pub accepted: i64,
    pub demand: i64,
    pub sales: i64,
    pub reward_shared: f64,
}

pub fn trace_rows(tables: &EnvTables) -> Vec<TraceRow> {
    let (_, n, _, k) = tables.on_hand.shape();
    let mut rows = Vec::with_capacity(tables.clock * (n + 1) * k);
    for t in 0..tables.clock {
        for vertex in 0..=n {
            for product in 0..k {
                let (demand, sales) = if vertex == 0 {
                    (
                        (0..n).map(|v| tables.requested.get(t, v, STORE, product)).sum(),
                        (0..n).map(|v| tables.accepted.get(t, v, STORE, product)).sum(),
                    )
                } else {
                    (
                        tables.demand.get(t, vertex - 1, product),
                        tables.sales.get(t, vertex - 1, STORE, product),
                    )
                };
                rows.push(TraceRow {
                    t,
                    vertex,
                    product,
                    on_hand: tables.on_hand.vertex(t, vertex)[product],
                    in_transit: tables.in_transit.vertex(t, vertex)[product],
                    requested: tables.requested.vertex(t, vertex)[product],
                    accepted: tables.accepted.vertex(t, vertex)[product],
                    demand,
                    sales,
                    reward_shared: tables.reward[t],
                });
            }
        }
    }
    rows
}

pub fn write_trace_csv<W: Write>(tables: &EnvTables, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace_rows(tables) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            r.vertex,
            r.product,
            r.on_hand,
            r.in_transit,
            r.requested,
            r.accepted,
            r.demand,
            r.sales,
            r.reward_shared
        )?;
    }
    Ok(())
}
