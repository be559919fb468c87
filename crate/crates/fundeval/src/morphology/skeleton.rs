//! Zhang-Suen iterative thinning.

use super::BinaryMask;

/// Thin a mask to a 1-pixel skeleton by Zhang-Suen two-subiteration thinning,
/// run to fixpoint. The skeleton is a subset of the input and preserves
/// 8-connectivity of each component.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    let mut current = mask.clone();
    let mut to_delete: Vec<usize> = Vec::new();
    loop {
        let mut changed = false;
        for phase in 0..2 {
            to_delete.clear();
            for y in 0..current.height {
                for x in 0..current.width {
                    if current.get(x, y) && deletable(&current, x, y, phase) {
                        to_delete.push(y * current.width + x);
                    }
                }
            }
            if !to_delete.is_empty() {
                changed = true;
                for &idx in &to_delete {
                    current.data[idx] = false;
                }
            }
        }
        if !changed {
            return current;
        }
    }
}

#[inline]
fn at(mask: &BinaryMask, x: isize, y: isize) -> bool {
    if x < 0 || y < 0 || x >= mask.width as isize || y >= mask.height as isize {
        false
    } else {
        mask.get(x as usize, y as usize)
    }
}

fn deletable(mask: &BinaryMask, x: usize, y: usize, phase: usize) -> bool {
    let (x, y) = (x as isize, y as isize);
    // neighbours p2..p9, clockwise from north
    let p = [
        at(mask, x, y - 1),     // p2 N
        at(mask, x + 1, y - 1), // p3 NE
        at(mask, x + 1, y),     // p4 E
        at(mask, x + 1, y + 1), // p5 SE
        at(mask, x, y + 1),     // p6 S
        at(mask, x - 1, y + 1), // p7 SW
        at(mask, x - 1, y),     // p8 W
        at(mask, x - 1, y - 1), // p9 NW
    ];
    let b: usize = p.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) {
        return false;
    }
    // A(p1): number of false -> true transitions around the ring
    let mut a = 0;
    for i in 0..8 {
        if !p[i] && p[(i + 1) % 8] {
            a += 1;
        }
    }
    if a != 1 {
        return false;
    }
    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
    if phase == 0 {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}
