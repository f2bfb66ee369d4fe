use freezeltl::logic::models;
use freezeltl::pcp::{
    build_formula, encode_sequence, encode_solution, lift_formula, lift_to_order, parts, pcp_order, tile_formula,
    validate_solution, PcpInstance, Tile, X, Y, Z,
};
use freezeltl::{DataWord, Formula, Letter, Position, QuasiOrder, Sym};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn three_tiles() -> PcpInstance {
    PcpInstance::parse("tile ab abc\ntile cc cab\ntile a -\n").unwrap()
}

/// The three-tile word written out by hand.
fn three_tile_word() -> DataWord {
    let rows: [(&str, &[&str], [u64; 3]); 11] = [
        ("bar_a", &["o"], [2, 1, 10]),
        ("bar_b", &["e"], [2, 3, 20]),
        ("bar_c", &["o"], [4, 3, 30]),
        ("a", &["o"], [2, 1, 10]),
        ("b", &["e", "end"], [2, 3, 20]),
        ("bar_c", &["e"], [4, 5, 40]),
        ("bar_a", &["o"], [6, 5, 50]),
        ("bar_b", &["e"], [6, 7, 70]),
        ("c", &["o"], [4, 3, 30]),
        ("c", &["e", "end"], [4, 5, 40]),
        ("a", &["o", "end"], [6, 5, 50]),
    ];
    DataWord::new(
        rows.iter()
            .map(|(l, ps, v)| Position {
                letter: Letter::set(std::iter::once(Sym::new(l)).chain(ps.iter().map(|p| Sym::new(p)))),
                val: v.to_vec(),
            })
            .collect(),
    )
    .unwrap()
}

fn holds(p: &PcpInstance, w: &DataWord, bounded: bool) -> bool {
    models(&pcp_order(), w, &build_formula(p, bounded).formula()).unwrap()
}

/// Sequences starting with the initial tile, at most `max` tiles, that
/// satisfy the modified conditions; found by extending while the u-part
/// stays a proper prefix of the v-part.
fn solutions(p: &PcpInstance, max: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![vec![0usize]];
    while let Some(seq) = stack.pop() {
        let (u, v) = parts(p, &seq);
        if u == v && u.len() % 2 == 1 {
            out.push(seq.clone());
        }
        if u.len() < v.len() && v.starts_with(&u) && seq.len() < max {
            for t in 0..p.tiles.len() {
                let mut s = seq.clone();
                s.push(t);
                stack.push(s);
            }
        }
    }
    out
}

fn random_word(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| if rng.gen_bool(0.5) { 'a' } else { 'b' }).collect()
}

/// Solvable instances with total tile length at most 8.
fn random_solvable(seed: u64, want: usize) -> Vec<(PcpInstance, Vec<Vec<usize>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..20_000 {
        if out.len() == want {
            break;
        }
        let mut tiles = vec![Tile::new(&random_word(&mut rng, 2, 2), &random_word(&mut rng, 3, 3))];
        for _ in 0..rng.gen_range(1..=2) {
            let t = Tile::new(&random_word(&mut rng, 0, 2), &random_word(&mut rng, 0, 2));
            if !t.u.is_empty() || !t.v.is_empty() {
                tiles.push(t);
            }
        }
        if tiles.iter().map(|t| t.u.len() + t.v.len()).sum::<usize>() > 8 {
            continue;
        }
        let p = PcpInstance::new(tiles).unwrap();
        let s = solutions(&p, 5);
        if !s.is_empty() {
            out.push((p, s));
        }
    }
    out
}

fn swap_letters(w: &DataWord, i: usize, j: usize) -> DataWord {
    let mut m = w.clone();
    let li = m.positions[i].letter.clone();
    let lj = m.positions[j].letter.clone();
    let (ni, nj) = (letter_of(&li), letter_of(&lj));
    m.positions[i].letter = li.without(ni).with(nj);
    m.positions[j].letter = lj.without(nj).with(ni);
    m
}

fn letter_of(l: &Letter) -> Sym {
    *l.props()
        .iter()
        .find(|p| !["o", "e", "end"].contains(&p.as_str()))
        .unwrap()
}

fn is_bar(w: &DataWord, i: usize) -> bool {
    letter_of(&w.positions[i].letter).as_str().starts_with("bar_")
}

#[test]
fn three_tile_sequence_is_not_a_solution() {
    let p = three_tiles();
    let (u, v) = parts(&p, &[0, 1, 2]);
    assert_eq!(u.iter().collect::<String>(), "abcca");
    assert_eq!(v.iter().collect::<String>(), "abccab");
    assert!(!validate_solution(&p, &[0, 1, 2]));
    assert!(encode_solution(&p, &[0, 1, 2]).is_err());
}

#[test]
fn value_scheme_reproduces_the_hand_written_word() {
    let p = three_tiles();
    let w = encode_sequence(&p, &[0, 1, 2]);
    assert_eq!(w.canonicalize(), three_tile_word().canonicalize());
}

#[test]
fn hand_written_word_fails_only_where_expected() {
    // the v-part has even length: its last position cannot be chained, and
    // its z-value is matched by no u-position
    let p = three_tiles();
    let f = build_formula(&p, false);
    let q = pcp_order();
    let w = three_tile_word();
    assert!(models(&q, &w, &f.tiles).unwrap());
    assert!(!models(&q, &w, &f.chain).unwrap());
    assert!(!models(&q, &w, &f.sync).unwrap());
}

#[test]
fn initial_tile_formula_shape() {
    let p = PcpInstance::parse("tile ab abc\n").unwrap();
    let f = build_formula(&p, false);
    let t = tile_formula(&p.tiles[0]);
    let want = Formula::and(
        t.clone(),
        Formula::globally(Formula::implies(Formula::letter("end"), Formula::weak_next(t))),
    );
    let Formula::And(a, _) = &f.tiles else { panic!() };
    let mut cur = a.as_ref();
    while let Formula::And(l, _) = cur {
        if **l == want {
            break;
        }
        cur = l;
    }
    let Formula::And(l, _) = cur else { panic!() };
    assert_eq!(**l, want);
}

#[test]
fn encodings_of_solutions_are_models() {
    let p = PcpInstance::parse("tile ab abc\ntile cab ab\n").unwrap();
    assert!(validate_solution(&p, &[0, 1]));
    let w = encode_solution(&p, &[0, 1]).unwrap();
    assert!(holds(&p, &w, false));
    assert!(holds(&p, &w, true));
}

#[test]
fn consecutive_positions_share_the_chaining_values() {
    for (p, sols) in random_solvable(3, 8) {
        for s in sols {
            let w = encode_solution(&p, &s).unwrap();
            for bar in [true, false] {
                let part: Vec<&Vec<u64>> = (0..w.len())
                    .filter(|&i| is_bar(&w, i) == bar)
                    .map(|i| &w.positions[i].val)
                    .collect();
                for i in 0..part.len() - 1 {
                    // 1-based position i+1
                    if i % 2 == 0 {
                        assert_eq!(part[i][X], part[i + 1][X]);
                        assert_ne!(part[i][Y], part[i + 1][Y]);
                    } else {
                        assert_eq!(part[i][Y], part[i + 1][Y]);
                        assert_ne!(part[i][X], part[i + 1][X]);
                    }
                }
                let mut count: HashMap<u64, usize> = HashMap::new();
                for v in &part {
                    *count.entry(v[X]).or_default() += 1;
                    *count.entry(v[Y]).or_default() += 1;
                }
                assert!(count.values().all(|&c| c <= 2));
                assert!(part.iter().all(|v| part.iter().all(|u| u[X] != v[Y])));
            }
            // z ties each v-position to the u-position of the same index
            let (vs, us): (Vec<usize>, Vec<usize>) = (0..w.len()).partition(|&i| is_bar(&w, i));
            for (a, b) in vs.iter().zip(&us) {
                assert_eq!(w.positions[*a].val, w.positions[*b].val);
                assert_eq!(w.positions[*a].val[Z], w.positions[*b].val[Z]);
            }
        }
    }
}

#[test]
fn random_solutions_are_models_and_swaps_are_not() {
    let inst = random_solvable(11, 12);
    assert_eq!(inst.len(), 12);
    let mut swaps = 0;
    for (p, sols) in &inst {
        for s in sols {
            assert!(validate_solution(p, s));
            let w = encode_solution(p, s).unwrap();
            assert!(holds(p, &w, false), "{p:?} {s:?}");
            assert!(holds(p, &w, true), "{p:?} {s:?}");
            for i in 0..w.len() {
                for j in i + 1..w.len() {
                    if letter_of(&w.positions[i].letter) == letter_of(&w.positions[j].letter) {
                        continue;
                    }
                    if is_bar(&w, i) != is_bar(&w, j) {
                        continue;
                    }
                    assert!(!holds(p, &swap_letters(&w, i, j), false), "{p:?} {s:?} swap {i} {j}");
                    swaps += 1;
                }
            }
        }
    }
    assert!(swaps > 20);
}

#[test]
fn non_solutions_in_the_value_scheme_are_rejected() {
    let mut checked = 0;
    for (p, _) in random_solvable(5, 8) {
        let n = p.tiles.len();
        for len in 1..=3 {
            for code in 0..n.pow(len as u32) {
                let mut seq = vec![0];
                let mut c = code;
                for _ in 1..len {
                    seq.push(c % n);
                    c /= n;
                }
                if code >= n.pow(len as u32 - 1) || validate_solution(&p, &seq) {
                    continue;
                }
                let w = encode_sequence(&p, &seq);
                assert!(!holds(&p, &w, false), "{p:?} {seq:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 20);
}

#[test]
fn bounded_mode_has_no_until() {
    fn has_until(f: &Formula) -> bool {
        matches!(f, Formula::Until(..)) || f.children().into_iter().any(has_until)
    }
    let p = three_tiles();
    assert!(has_until(&build_formula(&p, false).formula()));
    assert!(!has_until(&build_formula(&p, true).formula()));
}

#[test]
fn lifting_to_a_larger_order() {
    let big = QuasiOrder::close(
        &["w", "x", "y", "z", "t"],
        &[("x", "z"), ("y", "z"), ("w", "z"), ("z", "t")],
    )
    .unwrap();
    let small = pcp_order();
    let p = PcpInstance::parse("tile ab abc\ntile cab ab\n").unwrap();
    let f = lift_formula(&build_formula(&p, false).formula(), &small, &big).unwrap();
    let w = encode_solution(&p, &[0, 1]).unwrap();
    let lifted = lift_to_order(&w, &small, &big).unwrap();
    assert!(models(&big, &lifted, &f).unwrap());
    let swapped = lift_to_order(&swap_letters(&w, 3, 4), &small, &big).unwrap();
    assert!(!models(&big, &swapped, &f).unwrap());
    assert!(lift_to_order(&w, &small, &QuasiOrder::linear(3)).is_err());
}
