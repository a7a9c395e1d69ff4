//! Sliding-tile helpers. A board is a row-major vector of tile numbers with
//! 0 for the blank.

/// Parity invariant of a board: the permutation parity of the tiles,
/// combined with the blank's row when the width is even. Two boards are
/// mutually reachable iff their classes agree.
pub fn parity_class(board: &[u8], width: usize) -> u8 {
    let tiles: Vec<u8> = board.iter().copied().filter(|&t| t != 0).collect();
    let mut inversions = 0usize;
    for i in 0..tiles.len() {
        for j in i + 1..tiles.len() {
            if tiles[i] > tiles[j] {
                inversions += 1;
            }
        }
    }
    let blank_row = board.iter().position(|&t| t == 0).expect("board has a blank") / width;
    let row_term = if width % 2 == 0 { blank_row } else { 0 };
    ((inversions + row_term) % 2) as u8
}

/// Goal board: tiles 1..n-1 in order, blank last.
pub fn goal_board(rows: usize, cols: usize) -> Vec<u8> {
    let n = rows * cols;
    (1..n as u8).chain(std::iter::once(0)).collect()
}

pub fn is_solvable(board: &[u8], rows: usize, cols: usize) -> bool {
    parity_class(board, cols) == parity_class(&goal_board(rows, cols), cols)
}

/// Cells orthogonally adjacent to `cell`.
pub fn neighbours(cell: usize, rows: usize, cols: usize) -> impl Iterator<Item = usize> {
    let (r, c) = (cell / cols, cell % cols);
    let mut out = Vec::with_capacity(4);
    if r > 0 {
        out.push(cell - cols);
    }
    if r + 1 < rows {
        out.push(cell + cols);
    }
    if c > 0 {
        out.push(cell - 1);
    }
    if c + 1 < cols {
        out.push(cell + 1);
    }
    out.into_iter()
}
