//! Per-domain candidate generators. Candidates are solvable by construction
//! except for rooms (walk-planned, then planner-checked like every domain)
//! and the cost window, which the caller enforces.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::npuzzle;
use super::{DomainId, ForgeError, SizeParams};
use crate::pddl::{GroundAtom, ProblemDef, TypedName};

struct Builder {
    domain: DomainId,
    objects: Vec<TypedName>,
    init: BTreeSet<GroundAtom>,
    goal: BTreeSet<GroundAtom>,
}

impl Builder {
    fn new(domain: DomainId) -> Self {
        Builder {
            domain,
            objects: Vec::new(),
            init: BTreeSet::new(),
            goal: BTreeSet::new(),
        }
    }

    fn objects(&mut self, names: &[String], ty: &str) {
        for n in names {
            self.objects.push(TypedName::new(n.clone(), ty));
        }
    }

    fn init(&mut self, pred: &str, args: &[&str]) {
        self.init.insert(GroundAtom::new(pred, args.iter().copied()));
    }

    fn goal(&mut self, pred: &str, args: &[&str]) {
        self.goal.insert(GroundAtom::new(pred, args.iter().copied()));
    }

    fn finish(self) -> ProblemDef {
        ProblemDef {
            name: String::new(),
            domain_name: self.domain.as_str().to_string(),
            objects: self.objects,
            init: self.init,
            goal: self.goal,
        }
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub(super) fn candidate(
    domain: DomainId,
    params: &SizeParams,
    rng: &mut ChaCha8Rng,
) -> Result<ProblemDef, ForgeError> {
    Ok(match domain {
        DomainId::Blocksworld3 => blocks(domain, params, rng, false),
        DomainId::Blocksworld4 => blocks(domain, params, rng, true),
        DomainId::Ferry => ferry(params, rng),
        DomainId::Hanoi => hanoi(params, rng),
        DomainId::Logistics => logistics(params, rng),
        DomainId::Elevator => elevator(params, rng),
        DomainId::Npuzzle => npuzzle_problem(params, rng),
        DomainId::Visitgrid => visitgrid(params, rng),
        DomainId::Sokoban => sokoban(params, rng),
        DomainId::Rooms => rooms(params, rng),
        DomainId::Spanner => spanner(params, rng)?,
    })
}

/// Random stacking of `n` items: towers listed bottom to top.
fn random_towers(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut towers: Vec<Vec<usize>> = Vec::new();
    for b in order {
        let k = rng.random_range(0..=towers.len());
        if k == towers.len() {
            towers.push(vec![b]);
        } else {
            towers[k].push(b);
        }
    }
    towers
}

fn blocks(domain: DomainId, params: &SizeParams, rng: &mut ChaCha8Rng, arm: bool) -> ProblemDef {
    let n = params.usize("blocks");
    let blocks = names("b", n);
    let mut b = Builder::new(domain);
    b.objects(&blocks, "block");
    for tower in random_towers(n, rng) {
        b.init("on-table", &[&blocks[tower[0]]]);
        for w in tower.windows(2) {
            b.init("on", &[&blocks[w[1]], &blocks[w[0]]]);
        }
        b.init("clear", &[&blocks[*tower.last().expect("non-empty tower")]]);
    }
    if arm {
        b.init("arm-empty", &[]);
    }
    for tower in random_towers(n, rng) {
        b.goal("on-table", &[&blocks[tower[0]]]);
        for w in tower.windows(2) {
            b.goal("on", &[&blocks[w[1]], &blocks[w[0]]]);
        }
    }
    b.finish()
}

/// Undirected connected graph: random spanning tree plus extra edges.
fn random_connected_graph(n: usize, extra_prob: f64, rng: &mut ChaCha8Rng) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.insert((j, i));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !edges.contains(&(i, j)) && rng.random_bool(extra_prob) {
                edges.insert((i, j));
            }
        }
    }
    edges
}

fn ferry(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let cars = names("c", params.usize("cars"));
    let n = params.usize("locations");
    let locs = names("l", n);
    let mut b = Builder::new(DomainId::Ferry);
    b.objects(&cars, "car");
    b.objects(&locs, "location");
    for (i, j) in random_connected_graph(n, 0.3, rng) {
        b.init("connected", &[&locs[i], &locs[j]]);
        b.init("connected", &[&locs[j], &locs[i]]);
    }
    b.init("at-ferry", &[&locs[rng.random_range(0..n)]]);
    b.init("empty-ferry", &[]);
    for c in &cars {
        b.init("at", &[c, &locs[rng.random_range(0..n)]]);
        b.goal("at", &[c, &locs[rng.random_range(0..n)]]);
    }
    b.finish()
}

fn hanoi(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let n = params.usize("disks");
    let k = params.usize("pegs");
    let disks = names("d", n);
    let pegs = names("peg", k);
    let mut b = Builder::new(DomainId::Hanoi);
    b.objects(&disks, "disk");
    b.objects(&pegs, "peg");
    for i in 0..n {
        for j in i + 1..n {
            b.init("smaller", &[&disks[i], &disks[j]]);
        }
        for peg in &pegs {
            b.init("smaller", &[&disks[i], peg]);
        }
    }
    let (start, target): (Vec<usize>, Vec<usize>) = if params.get("full_stack") == 1 {
        (vec![0; n], vec![k - 1; n])
    } else {
        (
            (0..n).map(|_| rng.random_range(0..k)).collect(),
            (0..n).map(|_| rng.random_range(0..k)).collect(),
        )
    };
    let mut emit = |assign: &[usize], goal: bool| {
        for (p, peg) in pegs.iter().enumerate() {
            // largest disk at the bottom
            let mut below: &str = peg;
            for d in (0..n).rev().filter(|&d| assign[d] == p) {
                if goal {
                    b.goal("on", &[&disks[d], below]);
                } else {
                    b.init("on", &[&disks[d], below]);
                }
                below = &disks[d];
            }
            if !goal {
                b.init("clear", &[below]);
            }
        }
    };
    emit(&start, false);
    emit(&target, true);
    b.finish()
}

fn logistics(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let cities = names("city", params.usize("cities"));
    let per_city = params.usize("locations_per_city");
    let packages = names("pkg", params.usize("packages"));
    let planes = names("plane", params.usize("airplanes"));
    let mut b = Builder::new(DomainId::Logistics);
    b.objects(&cities, "city");
    let mut all_locs = Vec::new();
    let mut airports = Vec::new();
    let trucks = names("truck", cities.len());
    for (ci, city) in cities.iter().enumerate() {
        let mut locs = Vec::new();
        for j in 1..=per_city {
            let loc = format!("loc{}-{}", ci + 1, j);
            if j == 1 {
                b.objects(std::slice::from_ref(&loc), "airport");
                airports.push(loc.clone());
            } else {
                b.objects(std::slice::from_ref(&loc), "location");
            }
            b.init("in-city", &[&loc, city]);
            locs.push(loc);
        }
        b.objects(std::slice::from_ref(&trucks[ci]), "truck");
        b.init("at", &[&trucks[ci], &locs[rng.random_range(0..locs.len())]]);
        all_locs.extend(locs);
    }
    b.objects(&planes, "airplane");
    for plane in &planes {
        b.init("at", &[plane, &airports[rng.random_range(0..airports.len())]]);
    }
    b.objects(&packages, "package");
    for pkg in &packages {
        b.init("at", &[pkg, &all_locs[rng.random_range(0..all_locs.len())]]);
        b.goal("at", &[pkg, &all_locs[rng.random_range(0..all_locs.len())]]);
    }
    b.finish()
}

fn elevator(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let nf = params.usize("floors");
    let floors = names("f", nf);
    let passengers = names("p", params.usize("passengers"));
    let mut b = Builder::new(DomainId::Elevator);
    b.objects(&passengers, "passenger");
    b.objects(&floors, "floor");
    for i in 0..nf {
        for j in 0..i {
            b.init("above", &[&floors[i], &floors[j]]);
        }
    }
    for p in &passengers {
        let o = rng.random_range(0..nf);
        let mut d = rng.random_range(0..nf - 1);
        if d >= o {
            d += 1;
        }
        b.init("origin", &[p, &floors[o]]);
        b.init("destin", &[p, &floors[d]]);
        b.goal("served", &[p]);
    }
    b.init("lift-at", &[&floors[rng.random_range(0..nf)]]);
    b.finish()
}

fn npuzzle_problem(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let rows = params.usize("rows");
    let cols = params.usize("cols");
    let goal = npuzzle::goal_board(rows, cols);
    let board = if params.get("uniform") == 1 {
        let mut board = goal.clone();
        board.shuffle(rng);
        if !npuzzle::is_solvable(&board, rows, cols) {
            // swapping two tiles flips the permutation parity
            let tiles: Vec<usize> = (0..board.len()).filter(|&i| board[i] != 0).take(2).collect();
            board.swap(tiles[0], tiles[1]);
        }
        board
    } else {
        let mut board = goal.clone();
        let mut blank = board.len() - 1;
        let mut prev = usize::MAX;
        for _ in 0..params.usize("scramble") {
            let options: Vec<usize> = npuzzle::neighbours(blank, rows, cols).filter(|&n| n != prev).collect();
            let next = options[rng.random_range(0..options.len())];
            board.swap(blank, next);
            prev = blank;
            blank = next;
        }
        board
    };
    debug_assert!(npuzzle::is_solvable(&board, rows, cols));
    npuzzle_instance(rows, cols, &board)
}

/// Problem for an explicit board, goal is the canonical ordered board.
pub(crate) fn npuzzle_instance(rows: usize, cols: usize, board: &[u8]) -> ProblemDef {
    let n = rows * cols;
    let tiles = names("t", n - 1);
    let pos: Vec<String> = (0..n)
        .map(|i| format!("p{}-{}", i / cols + 1, i % cols + 1))
        .collect();
    let mut b = Builder::new(DomainId::Npuzzle);
    b.objects(&tiles, "tile");
    b.objects(&pos, "position");
    for cell in 0..n {
        for nb in npuzzle::neighbours(cell, rows, cols) {
            b.init("adjacent", &[&pos[cell], &pos[nb]]);
        }
        match board[cell] {
            0 => b.init("empty", &[&pos[cell]]),
            t => b.init("at", &[&tiles[t as usize - 1], &pos[cell]]),
        }
    }
    for (cell, t) in npuzzle::goal_board(rows, cols).into_iter().enumerate() {
        if t != 0 {
            b.goal("at", &[&tiles[t as usize - 1], &pos[cell]]);
        }
    }
    b.finish()
}

fn visitgrid(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let (w, h) = (params.usize("width"), params.usize("height"));
    let n = w * h;
    let cells = names("c", n);
    let mut b = Builder::new(DomainId::Visitgrid);
    b.objects(&cells, "place");
    for cell in 0..n {
        for nb in npuzzle::neighbours(cell, h, w) {
            b.init("connected", &[&cells[cell], &cells[nb]]);
        }
    }
    let start = rng.random_range(0..n);
    b.init("at-robot", &[&cells[start]]);
    b.init("visited", &[&cells[start]]);
    let targets = ((n * params.usize("target_pct")).div_ceil(100)).clamp(1, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    for &t in &order[..targets] {
        b.goal("visited", &[&cells[t]]);
    }
    b.finish()
}

const DIRS: [(&str, i64, i64); 4] = [("up", 0, -1), ("down", 0, 1), ("left", -1, 0), ("right", 1, 0)];

fn sokoban(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let (w, h) = (params.usize("width"), params.usize("height"));
    let at = |x: i64, y: i64| -> Option<usize> {
        (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h).then(|| y as usize * w + x as usize)
    };
    // walls are dropped one at a time while the floor stays connected
    let mut floor = vec![true; w * h];
    let connected = |floor: &[bool]| {
        let cells: Vec<usize> = (0..floor.len()).filter(|&c| floor[c]).collect();
        let Some(&first) = cells.first() else {
            return false;
        };
        let mut seen = vec![false; floor.len()];
        let mut stack = vec![first];
        seen[first] = true;
        let mut count = 0;
        while let Some(c) = stack.pop() {
            count += 1;
            for nb in npuzzle::neighbours(c, h, w) {
                if floor[nb] && !seen[nb] {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        count == cells.len()
    };
    for _ in 0..params.usize("walls") {
        let c = rng.random_range(0..w * h);
        if floor[c] {
            floor[c] = false;
            if !connected(&floor) {
                floor[c] = true;
            }
        }
    }
    let cells: Vec<usize> = (0..w * h).filter(|&c| floor[c]).collect();
    let nboxes = params.usize("boxes").min(cells.len().saturating_sub(1));
    let mut shuffled = cells.clone();
    shuffled.shuffle(rng);
    let goals: Vec<usize> = shuffled[..nboxes].to_vec();
    let mut boxes = goals.clone();
    let mut robot = shuffled[nboxes];

    // reverse play: the robot walks or pulls a box behind it
    for _ in 0..params.usize("steps") {
        let (rx, ry) = ((robot % w) as i64, (robot / w) as i64);
        let mut pulls = Vec::new();
        let mut walks = Vec::new();
        for (_, dx, dy) in DIRS {
            let Some(back) = at(rx - dx, ry - dy).filter(|&c| floor[c] && !boxes.contains(&c)) else {
                continue;
            };
            walks.push(back);
            if let Some(bi) = at(rx + dx, ry + dy).and_then(|c| boxes.iter().position(|&b| b == c)) {
                pulls.push((back, bi));
            }
        }
        if !pulls.is_empty() && (walks.is_empty() || rng.random_bool(0.6)) {
            let (back, bi) = pulls[rng.random_range(0..pulls.len())];
            boxes[bi] = robot;
            robot = back;
        } else if !walks.is_empty() {
            robot = walks[rng.random_range(0..walks.len())];
        }
    }

    let loc = |c: usize| format!("l{}-{}", c % w + 1, c / w + 1);
    let box_names = names("box", nboxes);
    let mut b = Builder::new(DomainId::Sokoban);
    b.objects(&cells.iter().map(|&c| loc(c)).collect::<Vec<_>>(), "location");
    b.objects(&DIRS.iter().map(|d| d.0.to_string()).collect::<Vec<_>>(), "direction");
    b.objects(&box_names, "box");
    for &c in &cells {
        let (x, y) = ((c % w) as i64, (c / w) as i64);
        for (name, dx, dy) in DIRS {
            if let Some(n) = at(x + dx, y + dy).filter(|&n| floor[n]) {
                b.init("move-dir", &[&loc(c), &loc(n), name]);
            }
        }
        if !boxes.contains(&c) {
            b.init("clear", &[&loc(c)]);
        }
    }
    b.init("at-robot", &[&loc(robot)]);
    for (i, name) in box_names.iter().enumerate() {
        b.init("at", &[name, &loc(boxes[i])]);
        b.goal("at", &[name, &loc(goals[i])]);
    }
    b.finish()
}

fn spanner(params: &SizeParams, rng: &mut ChaCha8Rng) -> Result<ProblemDef, ForgeError> {
    let n = params.usize("locations");
    let nspanners = params.usize("spanners");
    let nnuts = params.usize("nuts");
    if nspanners * 2 < nnuts {
        return Err(ForgeError::InvalidParams {
            domain: DomainId::Spanner,
            reason: format!("{nspanners} spanners cannot tighten {nnuts} nuts"),
        });
    }
    let locs = names("l", n);
    let spanners = names("s", nspanners);
    let nuts = names("n", nnuts);
    let mut b = Builder::new(DomainId::Spanner);
    b.objects(&["bob".to_string()], "man");
    b.objects(&spanners, "spanner");
    b.objects(&nuts, "nut");
    b.objects(&locs, "location");
    let back_prob = params.get("two_way_pct") as f64 / 100.0;
    for i in 0..n - 1 {
        b.init("link", &[&locs[i], &locs[i + 1]]);
        if rng.random_bool(back_prob) {
            b.init("link", &[&locs[i + 1], &locs[i]]);
        }
    }
    b.init("at", &["bob", &locs[0]]);
    let mut uses: Vec<usize> = (0..nspanners).map(|_| rng.random_range(1..=2)).collect();
    // top up durability until the nuts can all be tightened
    let mut i = 0;
    while uses.iter().sum::<usize>() < nnuts {
        uses[i] = 2;
        i += 1;
    }
    for (s, &u) in spanners.iter().zip(&uses) {
        b.init("at", &[s, &locs[rng.random_range(0..n)]]);
        b.init(if u == 2 { "useable2" } else { "useable1" }, &[s]);
    }
    for nut in &nuts {
        b.init("at", &[nut, &locs[n - 1]]);
        b.init("loose", &[nut]);
        b.goal("tightened", &[nut]);
    }
    Ok(b.finish())
}

fn rooms(params: &SizeParams, rng: &mut ChaCha8Rng) -> ProblemDef {
    let n = params.usize("rooms");
    let rooms = names("r", n);
    let mut edges = BTreeSet::new();
    for i in 1..n {
        edges.insert((rng.random_range(0..i), i));
    }
    for _ in 0..params.usize("extra_doors") {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            edges.insert((i.min(j), i.max(j)));
        }
    }
    // plan a random walk that breaks doors as it goes; lights are only lit in
    // rooms the walk passes through
    let start = rng.random_range(0..n);
    let mut intact = edges.clone();
    let mut walk = vec![start];
    let mut cur = start;
    loop {
        let exits: Vec<(usize, usize)> = intact
            .iter()
            .copied()
            .filter(|&(a, b)| a == cur || b == cur)
            .collect();
        if exits.is_empty() || rng.random_bool(0.15) {
            break;
        }
        let e = exits[rng.random_range(0..exits.len())];
        intact.remove(&e);
        cur = if e.0 == cur { e.1 } else { e.0 };
        walk.push(cur);
    }
    let mut visited: Vec<usize> = walk.clone();
    visited.sort_unstable();
    visited.dedup();
    visited.shuffle(rng);
    let lit = params.usize("lit").min(visited.len());

    let mut b = Builder::new(DomainId::Rooms);
    b.objects(&["bot".to_string()], "agent");
    b.objects(&rooms, "room");
    for &(i, j) in &edges {
        for (x, y) in [(i, j), (j, i)] {
            b.init("door", &[&rooms[x], &rooms[y]]);
            b.init("door-intact", &[&rooms[x], &rooms[y]]);
        }
    }
    b.init("at", &["bot", &rooms[start]]);
    for &r in &visited[..lit] {
        b.init("on", &[&rooms[r]]);
        b.goal("off", &[&rooms[r]]);
    }
    b.finish()
}
