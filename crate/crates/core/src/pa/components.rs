use crate::error::{Error, Result};

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

/// 4-connected labelling by two-pass union-find. Labels run 1..=N in the
/// raster order in which each component is first met; background is 0.
pub fn connected_components(mask: &[bool], height: usize, width: usize) -> Result<(Vec<u32>, usize)> {
    if mask.len() != height * width {
        return Err(Error::Shape(format!("mask of {} for {height}×{width}", mask.len())));
    }
    let mut provisional = vec![0u32; mask.len()];
    // parent[0] is unused so provisional labels index directly
    let mut parent: Vec<u32> = vec![0];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            if !mask[i] {
                continue;
            }
            let up = if y > 0 { provisional[i - width] } else { 0 };
            let left = if x > 0 { provisional[i - 1] } else { 0 };
            provisional[i] = match (up, left) {
                (0, 0) => {
                    let l = parent.len() as u32;
                    parent.push(l);
                    l
                }
                (a, 0) | (0, a) => a,
                (a, b) => {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        let (lo, hi) = (ra.min(rb), ra.max(rb));
                        parent[hi as usize] = lo;
                    }
                    a.min(b)
                }
            };
        }
    }
    let mut final_label = vec![0u32; parent.len()];
    let mut count = 0u32;
    let mut labels = vec![0u32; mask.len()];
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = find(&mut parent, p) as usize;
        if final_label[root] == 0 {
            count += 1;
            final_label[root] = count;
        }
        labels[i] = final_label[root];
    }
    Ok((labels, count as usize))
}
