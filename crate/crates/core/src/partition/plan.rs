use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{DecError, Result};

/// Contiguous blocks of Voronoi cells (mesh nodes), one block per rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    n_cells: usize,
    /// 0-based half-open ranges, one per rank.
    ranges: Vec<Range<usize>>,
}

/// Splits `n_cells` into `n_ranks` sequential blocks whose sizes differ by
/// at most one, the larger blocks going to the lowest ranks.
pub fn block_partition(n_cells: usize, n_ranks: usize) -> Result<PartitionPlan> {
    if n_ranks == 0 {
        return Err(DecError::InvalidArgument("at least one rank is required".into()));
    }
    if n_ranks > n_cells {
        return Err(DecError::InvalidArgument(format!(
            "{n_ranks} ranks for only {n_cells} cells"
        )));
    }
    let base = n_cells / n_ranks;
    let extra = n_cells % n_ranks;
    let mut start = 0;
    let ranges = (0..n_ranks)
        .map(|r| {
            let len = base + usize::from(r < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect();
    Ok(PartitionPlan { n_cells, ranges })
}

impl PartitionPlan {
    pub fn n_ranks(&self) -> usize {
        self.ranges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn range(&self, rank: usize) -> Range<usize> {
        self.ranges[rank].clone()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.ranges.iter().map(|r| r.len()).collect()
    }

    /// Inclusive 1-based index ranges, as printed in reports.
    pub fn one_based_ranges(&self) -> Vec<(usize, usize)> {
        self.ranges.iter().map(|r| (r.start + 1, r.end)).collect()
    }

    /// Rank owning 0-based cell `cell`.
    pub fn owner(&self, cell: usize) -> usize {
        assert!(cell < self.n_cells, "cell {cell} out of range");
        self.ranges.partition_point(|r| r.end <= cell)
    }

    /// Three-row table of ranks, block sizes and 1-based index ranges.
    pub fn report(&self) -> String {
        let mut cells = vec![
            vec!["Rank".to_string()],
            vec!["Number of local Voronoi cells".to_string()],
            vec!["Local Voronoi cell indices".to_string()],
        ];
        for (rank, (size, (lo, hi))) in self.sizes().into_iter().zip(self.one_based_ranges()).enumerate() {
            cells[0].push(rank.to_string());
            cells[1].push(size.to_string());
            cells[2].push(format!("{lo}-{hi}"));
        }
        let ncol = cells[0].len();
        let widths: Vec<usize> = (0..ncol)
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (s, &w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join(" | "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_by_three() {
        let p = block_partition(7, 3).unwrap();
        assert_eq!(p.sizes(), vec![3, 2, 2]);
        assert_eq!(p.one_based_ranges(), vec![(1, 3), (4, 5), (6, 7)]);
    }

    #[test]
    fn single_rank() {
        let p = block_partition(42, 1).unwrap();
        assert_eq!(p.one_based_ranges(), vec![(1, 42)]);
        assert_eq!(p.owner(41), 0);
    }

    #[test]
    fn errors() {
        assert!(block_partition(3, 4).is_err());
        assert!(block_partition(3, 0).is_err());
    }

    #[test]
    fn owner_matches_ranges() {
        let p = block_partition(100, 6).unwrap();
        for cell in 0..100 {
            assert!(p.range(p.owner(cell)).contains(&cell));
        }
    }

    #[test]
    fn report_layout() {
        let r = block_partition(100, 6).unwrap().report();
        let lines: Vec<&str> = r.lines().collect();
        assert_eq!(lines.len(), 3);
        let sizes: Vec<&str> = lines[1].split('|').skip(1).map(str::trim).collect();
        assert_eq!(sizes, ["17", "17", "17", "17", "16", "16"]);
        assert!(lines[2].contains("85-100"));
    }
}
