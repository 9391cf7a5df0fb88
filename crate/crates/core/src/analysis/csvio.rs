//! Frozen CSV schemas shared by the run recorder and the analysis
//! commands, plus the fit report format.
//!
//! All files are comma-separated with `\n` newlines, a `.` decimal
//! point and an exact header row.

use crate::analysis::{LvFit, PopulationRecord};
use crate::error::CsvError;

pub const POPULATION_HEADER: &str = "t,n_predators,n_prey_group,n_prey_solo,group_proportion";
pub const GROUPING_HEADER: &str = "t,group_proportion,n_prey_group,n_prey_solo";
pub const EVENTS_HEADER: &str = "t,species_fed,amount";

pub fn population_row(r: &PopulationRecord) -> String {
    format!(
        "{},{},{},{},{}",
        r.t, r.n_predators, r.n_prey_group, r.n_prey_solo, r.group_proportion
    )
}

/// Parse a population CSV produced by the recorder. Rejects a wrong
/// header, wrong field counts and malformed numbers, naming the
/// offending 1-based line.
pub fn parse_population_csv(text: &str) -> Result<Vec<PopulationRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(CsvError {
            line: 1,
            reason: "empty input".into(),
        });
    };
    if header != POPULATION_HEADER {
        return Err(CsvError {
            line: 1,
            reason: format!("expected header '{POPULATION_HEADER}'"),
        });
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CsvError {
                line: line_no,
                reason: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let parse_u64 = |s: &str, what: &str| -> Result<u64, CsvError> {
            s.parse().map_err(|e| CsvError {
                line: line_no,
                reason: format!("{what}: '{s}': {e}"),
            })
        };
        let group_proportion: f64 = fields[4].parse().map_err(|e| CsvError {
            line: line_no,
            reason: format!("group_proportion: '{}': {e}", fields[4]),
        })?;
        if !group_proportion.is_finite() {
            return Err(CsvError {
                line: line_no,
                reason: "group_proportion must be finite".into(),
            });
        }
        out.push(PopulationRecord {
            t: parse_u64(fields[0], "t")?,
            n_predators: parse_u64(fields[1], "n_predators")?,
            n_prey_group: parse_u64(fields[2], "n_prey_group")?,
            n_prey_solo: parse_u64(fields[3], "n_prey_solo")?,
            group_proportion,
        });
    }
    Ok(out)
}

/// One grouping-experiment row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupingRecord {
    pub t: u64,
    pub group_proportion: f64,
    pub n_prey_group: u64,
    pub n_prey_solo: u64,
}

/// One feeding event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub t: u64,
    pub species: crate::world::Species,
    pub amount: u64,
}

pub fn parse_grouping_csv(text: &str) -> Result<Vec<GroupingRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == GROUPING_HEADER => {}
        _ => {
            return Err(CsvError {
                line: 1,
                reason: format!("expected header '{GROUPING_HEADER}'"),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CsvError {
                line: line_no,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let bad = |what: &str, s: &str, e: &dyn std::fmt::Display| CsvError {
            line: line_no,
            reason: format!("{what}: '{s}': {e}"),
        };
        out.push(GroupingRecord {
            t: fields[0].parse().map_err(|e| bad("t", fields[0], &e))?,
            group_proportion: fields[1]
                .parse()
                .map_err(|e| bad("group_proportion", fields[1], &e))?,
            n_prey_group: fields[2]
                .parse()
                .map_err(|e| bad("n_prey_group", fields[2], &e))?,
            n_prey_solo: fields[3]
                .parse()
                .map_err(|e| bad("n_prey_solo", fields[3], &e))?,
        });
    }
    Ok(out)
}

pub fn parse_events_csv(text: &str) -> Result<Vec<EventRecord>, CsvError> {
    use crate::world::Species;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == EVENTS_HEADER => {}
        _ => {
            return Err(CsvError {
                line: 1,
                reason: format!("expected header '{EVENTS_HEADER}'"),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(CsvError {
                line: line_no,
                reason: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let species = match fields[1] {
            "group" => Species::Group,
            "solo" => Species::Solo,
            other => {
                return Err(CsvError {
                    line: line_no,
                    reason: format!("species_fed: unknown species '{other}'"),
                })
            }
        };
        let bad = |what: &str, s: &str, e: &dyn std::fmt::Display| CsvError {
            line: line_no,
            reason: format!("{what}: '{s}': {e}"),
        };
        out.push(EventRecord {
            t: fields[0].parse().map_err(|e| bad("t", fields[0], &e))?,
            species,
            amount: fields[2].parse().map_err(|e| bad("amount", fields[2], &e))?,
        });
    }
    Ok(out)
}

/// Extra fields reported next to the fitted coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub fit: LvFit,
    pub phase_lag: f64,
    pub cycles: usize,
}

/// Render `fit.txt`: one `key=value` per line, fixed key set.
pub fn format_fit_report(report: &FitReport) -> String {
    let p = &report.fit.params;
    let (p_star, q_star) = p.equilibrium();
    format!(
        "alpha={}\nbeta={}\ndelta={}\ngamma_lv={}\nr2_p={}\nr2_q={}\np_star={}\nq_star={}\nphase_lag={}\ncycles={}\n",
        p.alpha,
        p.beta,
        p.delta,
        p.gamma_lv,
        report.fit.r2_prey,
        report.fit.r2_predator,
        p_star,
        q_star,
        report.phase_lag,
        report.cycles,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_rows() {
        let rec = PopulationRecord {
            t: 10,
            n_predators: 100,
            n_prey_group: 50,
            n_prey_solo: 7,
            group_proportion: 0.25,
        };
        let text = format!("{POPULATION_HEADER}\n{}\n", population_row(&rec));
        let parsed = parse_population_csv(&text).unwrap();
        assert_eq!(parsed, vec![rec]);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = parse_population_csv("t,preds\n1,2\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn malformed_row_names_line() {
        let text = format!("{POPULATION_HEADER}\n1,2,3,4,0.5\n1,x,3,4,0.5\n");
        let err = parse_population_csv(&text).unwrap_err();
        assert_eq!(err.line, 3);
    }
}
