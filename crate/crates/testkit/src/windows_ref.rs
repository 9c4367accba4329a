//! Window enumeration by explicit walking of every start position.

/// All (inputs, label) windows for a document, right-padded with 0: starts
/// at 0, step, 2*step, ... while at least one real input precedes the label.
pub fn enumerate_windows(ids: &[u32], window: usize, step: usize) -> Vec<(Vec<u32>, u32)> {
    assert!(window >= 1 && step >= 1);
    let mut out = Vec::new();
    let mut start = 0usize;
    while start + 1 < ids.len() {
        let avail = ids.len() - start;
        let take = avail.min(window + 1);
        let mut inputs: Vec<u32> = ids[start..start + take - 1].to_vec();
        while inputs.len() < window {
            inputs.push(0);
        }
        let label = ids[start + take - 1];
        out.push((inputs, label));
        start += step;
    }
    out
}
