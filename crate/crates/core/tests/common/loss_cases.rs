use ensemble_forge::losses::{
    contrastive_loss, finite_diff_gradient, gaussian_kernel, nngk_class_prob, nngk_loss,
    nngk_neighbor_prob, proxy_anchor_loss, softtriple_loss, softtriple_similarity,
    supcon_anchor_terms, triplet_loss, Center, CenterSet, EmbeddingBatch, ProxySet,
    SoftTripleParams, SupConParams,
};
use ensemble_forge::LabelId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DERIVED: f64 = 1e-6;
pub const TRIVIAL: f64 = 1e-12;

pub struct Case {
    pub name: &'static str,
    pub got: f64,
    pub expected: f64,
    pub tol: f64,
}

impl Case {
    pub fn passes(&self) -> bool {
        (self.got - self.expected).abs() <= self.tol
    }
}

fn case(name: &'static str, got: f64, expected: f64, tol: f64) -> Case {
    Case {
        name,
        got,
        expected,
        tol,
    }
}

fn center(v: &[f64], label: u32, weight: f64) -> Center {
    Center {
        vector: v.to_vec(),
        label: LabelId(label),
        weight,
    }
}

/// Restricted kernel sum computed straight from the definition.
pub fn brute_neighbor_prob(x: &[f64], centers: &[Center], phi: f64, k: usize, r: u32) -> f64 {
    let mut d: Vec<(f64, usize)> = centers
        .iter()
        .enumerate()
        .map(|(i, c)| {
            (
                c.vector
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>(),
                i,
            )
        })
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (mut num, mut den) = (0.0, 0.0);
    for &(d2, i) in d.iter().take(k) {
        let v = centers[i].weight * (-d2 / (2.0 * phi * phi)).exp();
        den += v;
        if centers[i].label.0 == r {
            num += v;
        }
    }
    num / den
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

pub fn brute_proxy_anchor(
    points: &[(Vec<f64>, u32)],
    proxies: &[(Vec<f64>, u32)],
    alpha: f64,
    m: f64,
) -> f64 {
    let mut pos_terms = Vec::new();
    let mut neg_total = 0.0;
    for (p, class) in proxies {
        let mut pos = 0.0;
        let mut has_pos = false;
        let mut neg = 0.0;
        for (x, y) in points {
            let s = cos(x, p);
            if y == class {
                has_pos = true;
                pos += (-alpha * (s - m)).exp();
            } else {
                neg += (alpha * (s + m)).exp();
            }
        }
        if has_pos {
            pos_terms.push((1.0 + pos).ln());
        }
        neg_total += (1.0 + neg).ln();
    }
    pos_terms.iter().sum::<f64>() / pos_terms.len() as f64 + neg_total / proxies.len() as f64
}

pub fn brute_supcon(points: &[(Vec<f64>, u32)], tau: f64) -> f64 {
    let z: Vec<Vec<f64>> = points
        .iter()
        .map(|(v, _)| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| x / n).collect()
        })
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut total = 0.0;
    for i in 0..z.len() {
        let positives: Vec<usize> = (0..z.len())
            .filter(|&p| p != i && points[p].1 == points[i].1)
            .collect();
        if positives.is_empty() {
            continue;
        }
        let mut den = 0.0;
        for a in 0..z.len() {
            if a != i {
                den += (dot(&z[i], &z[a]) / tau).exp();
            }
        }
        let mut sum = 0.0;
        for &p in &positives {
            sum += ((dot(&z[i], &z[p]) / tau).exp() / den).ln();
        }
        total += -sum / positives.len() as f64;
    }
    total
}

/// Every hand-evaluated, identity, zero and saturation example of the loss
/// kernels, paired with its expected value and tolerance.
#[allow(clippy::approx_constant)]
pub fn hand_cases() -> Vec<Case> {
    let o = [0.0, 0.0];
    let mut v = vec![
        case(
            "contrastive identical same-class",
            contrastive_loss(&o, &o, true, 1.0).unwrap(),
            0.0,
            TRIVIAL,
        ),
        case(
            "contrastive D2=0.36 m=1",
            contrastive_loss(&o, &[0.6, 0.0], false, 1.0).unwrap(),
            0.64,
            DERIVED,
        ),
        case(
            "contrastive hinge saturated",
            contrastive_loss(&o, &[1.2, 0.0], false, 1.0).unwrap(),
            0.0,
            TRIVIAL,
        ),
        case(
            "triplet inactive hinge",
            triplet_loss(&o, &[0.5, 0.0], &[1.0, 0.0], 0.5).unwrap(),
            0.0,
            DERIVED,
        ),
        case(
            "triplet active hinge",
            triplet_loss(&o, &[1.0, 0.0], &[0.5, 0.0], 0.5).unwrap(),
            1.25,
            DERIVED,
        ),
        case(
            "triplet p = n, m = 0",
            triplet_loss(&o, &[0.3, 0.4], &[0.3, 0.4], 0.0).unwrap(),
            0.0,
            TRIVIAL,
        ),
        case(
            "kernel at the center",
            gaussian_kernel(&[0.7, -1.0], &[0.7, -1.0], 2.0).unwrap(),
            1.0,
            TRIVIAL,
        ),
        case(
            "kernel at |x-c|^2 = 2 phi^2",
            gaussian_kernel(&[1.0, 1.0], &o, 1.0).unwrap(),
            (-1.0f64).exp(),
            DERIVED,
        ),
    ];

    let one_class = CenterSet::new(
        vec![center(&[1.0, 0.0], 2, 1.0), center(&[0.0, 3.0], 2, 0.5)],
        1.0,
    )
    .unwrap();
    v.push(case(
        "nngk single class",
        nngk_class_prob(&[0.4, 0.4], &one_class, LabelId(2)).unwrap(),
        1.0,
        TRIVIAL,
    ));
    let ra = (-2.0 * 0.8f64.ln()).sqrt();
    let rb = (-2.0 * 0.2f64.ln()).sqrt();
    let two = CenterSet::new(
        vec![center(&[ra, 0.0], 0, 1.0), center(&[0.0, rb], 1, 1.0)],
        1.0,
    )
    .unwrap();
    v.push(case(
        "nngk kernels 0.8 / 0.2",
        nngk_class_prob(&o, &two, LabelId(0)).unwrap(),
        0.8,
        DERIVED,
    ));
    let doubled = two.with_weights(&[2.0, 2.0]).unwrap();
    v.push(case(
        "nngk doubled weights",
        nngk_class_prob(&o, &doubled, LabelId(0)).unwrap(),
        nngk_class_prob(&o, &two, LabelId(0)).unwrap(),
        TRIVIAL,
    ));
    let four_raw = vec![
        center(&[0.0, 0.0], 0, 1.0),
        center(&[1.0, 0.2], 1, 0.5),
        center(&[0.4, 0.9], 0, 2.0),
        center(&[-0.6, -0.3], 1, 1.5),
    ];
    let four = CenterSet::new(four_raw.clone(), 0.8).unwrap();
    let q = [0.3, 0.1];
    v.push(case(
        "nngk k = all reduces to class prob",
        nngk_neighbor_prob(&q, &four, 4, LabelId(1), None).unwrap(),
        nngk_class_prob(&q, &four, LabelId(1)).unwrap(),
        TRIVIAL,
    ));
    v.push(case(
        "nngk k = 1",
        nngk_neighbor_prob(&q, &four, 1, LabelId(0), None).unwrap(),
        1.0,
        TRIVIAL,
    ));
    v.push(case(
        "nngk 4 centers k = 2",
        nngk_neighbor_prob(&q, &four, 2, LabelId(1), None).unwrap(),
        brute_neighbor_prob(&q, &four_raw, 0.8, 2, 1),
        DERIVED,
    ));
    v.push(case(
        "nngk loss at 1",
        nngk_loss(1.0).unwrap(),
        0.0,
        TRIVIAL,
    ));
    v.push(case(
        "nngk loss at 1/e",
        nngk_loss((-1.0f64).exp()).unwrap(),
        1.0,
        TRIVIAL,
    ));
    v.push(case(
        "nngk loss at 0.5",
        nngk_loss(0.5).unwrap(),
        0.693147,
        DERIVED,
    ));

    let m = 0.1;
    let single =
        EmbeddingBatch::from_parts(vec![vec![m, (1.0 - m * m).sqrt()]], vec![LabelId(0)]).unwrap();
    let proxy = ProxySet::with_defaults(vec![(vec![1.0, 0.0], LabelId(0))]).unwrap();
    v.push(case(
        "proxy anchor s = m",
        proxy_anchor_loss(&single, &proxy).unwrap(),
        2f64.ln(),
        DERIVED,
    ));
    let aligned =
        EmbeddingBatch::from_parts(vec![vec![2.0, 0.0], vec![0.5, 0.0]], vec![LabelId(0); 2])
            .unwrap();
    let sharp = ProxySet::new(vec![(vec![1.0, 0.0], LabelId(0))], 200.0, 0.1).unwrap();
    v.push(case(
        "proxy anchor saturation",
        proxy_anchor_loss(&aligned, &sharp).unwrap(),
        0.0,
        TRIVIAL,
    ));
    let pts = vec![
        (vec![1.0, 0.2], 0),
        (vec![0.3, 0.9], 0),
        (vec![-0.5, 1.0], 1),
        (vec![0.8, -0.4], 1),
    ];
    let prx = vec![(vec![1.0, 0.1], 0), (vec![-0.2, 1.0], 1)];
    let batch = EmbeddingBatch::from_parts(
        pts.iter().map(|p| p.0.clone()).collect(),
        pts.iter().map(|p| LabelId(p.1)).collect(),
    )
    .unwrap();
    let set = ProxySet::new(
        prx.iter().map(|p| (p.0.clone(), LabelId(p.1))).collect(),
        32.0,
        0.1,
    )
    .unwrap();
    v.push(case(
        "proxy anchor 2 proxies 4 points",
        proxy_anchor_loss(&batch, &set).unwrap(),
        brute_proxy_anchor(&pts, &prx, 32.0, 0.1),
        DERIVED,
    ));

    let x = [1.0, 0.0];
    let k1 =
        SoftTripleParams::with_defaults(vec![vec![vec![0.3, 0.5]], vec![vec![0.0, 1.0]]]).unwrap();
    v.push(case(
        "softtriple K = 1",
        softtriple_similarity(&[2.0, 1.0], &k1, LabelId(0)).unwrap(),
        1.1,
        TRIVIAL,
    ));
    let eq = SoftTripleParams::with_defaults(vec![vec![vec![0.4, 1.0], vec![0.4, -1.0]]]).unwrap();
    v.push(case(
        "softtriple equal products",
        softtriple_similarity(&x, &eq, LabelId(0)).unwrap(),
        0.4,
        TRIVIAL,
    ));
    let k2 =
        SoftTripleParams::new(vec![vec![vec![1.0, 0.0], vec![0.0, 1.0]]], 0.1, 10.0, 0.01).unwrap();
    v.push(case(
        "softtriple K = 2 gamma = 0.1",
        softtriple_similarity(&x, &k2, LabelId(0)).unwrap(),
        0.9999546,
        DERIVED,
    ));
    let two_cls = SoftTripleParams::new(
        vec![vec![vec![1.0, 0.0]], vec![vec![0.5, 0.0]]],
        0.1,
        1.0,
        0.1,
    )
    .unwrap();
    v.push(case(
        "softtriple loss (1.0, 0.5)",
        softtriple_loss(&x, LabelId(0), &two_cls).unwrap(),
        0.513015,
        DERIVED,
    ));
    let three = SoftTripleParams::new(vec![vec![vec![1.0, 0.0]]; 3], 0.1, 10.0, 0.0).unwrap();
    v.push(case(
        "softtriple uniform",
        softtriple_loss(&x, LabelId(1), &three).unwrap(),
        3f64.ln(),
        TRIVIAL,
    ));
    let tiny = SoftTripleParams::new(
        vec![vec![vec![0.3, 0.0], vec![0.7, 0.0], vec![0.5, 0.0]]],
        1e-4,
        10.0,
        0.01,
    )
    .unwrap();
    v.push(case(
        "softtriple gamma -> 0 gives max",
        softtriple_similarity(&x, &tiny, LabelId(0)).unwrap(),
        0.7,
        1e-3,
    ));

    let tri = EmbeddingBatch::from_parts(
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
        vec![LabelId(0), LabelId(0), LabelId(1)],
    )
    .unwrap();
    let terms = supcon_anchor_terms(&tri, &SupConParams::default()).unwrap();
    v.push(case(
        "supcon equal similarities",
        terms[0].unwrap(),
        2f64.ln(),
        DERIVED,
    ));
    let sep = EmbeddingBatch::from_parts(
        vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![-1.0, 0.0]],
        vec![LabelId(0), LabelId(0), LabelId(1)],
    )
    .unwrap();
    let sat = supcon_anchor_terms(&sep, &SupConParams::new(0.01).unwrap()).unwrap();
    v.push(case("supcon saturation", sat[0].unwrap(), 0.0, TRIVIAL));
    let six: Vec<(Vec<f64>, u32)> = vec![
        (vec![1.0, 0.1], 0),
        (vec![0.8, 0.5], 0),
        (vec![0.9, -0.3], 0),
        (vec![-0.2, 1.0], 1),
        (vec![-0.7, 0.6], 1),
        (vec![0.1, 0.9], 1),
    ];
    let six_batch = EmbeddingBatch::from_parts(
        six.iter().map(|p| p.0.clone()).collect(),
        six.iter().map(|p| LabelId(p.1)).collect(),
    )
    .unwrap();
    v.push(case(
        "supcon 6 points tau = 0.1",
        ensemble_forge::losses::supcon_loss(&six_batch, &SupConParams::new(0.1).unwrap()).unwrap(),
        brute_supcon(&six, 0.1),
        DERIVED,
    ));

    let sq = finite_diff_gradient(
        |p| p[0].iter().map(|x| x * x).sum(),
        &[vec![1.0, 0.0]],
        1e-4,
    )
    .unwrap();
    v.push(case("fd gradient of |x|^2, x", sq[0][0], 2.0, 1e-6));
    v.push(case("fd gradient of |x|^2, y", sq[0][1], 0.0, 1e-6));
    let flat = finite_diff_gradient(
        |p| triplet_loss(&p[0], &p[1], &p[2], 0.5).unwrap(),
        &[vec![0.0, 0.0], vec![0.5, 0.0], vec![2.0, 0.0]],
        1e-4,
    )
    .unwrap();
    let flat_norm: f64 = flat.iter().flatten().map(|g| g.abs()).sum();
    v.push(case(
        "fd gradient of inactive triplet",
        flat_norm,
        0.0,
        TRIVIAL,
    ));
    let cg = finite_diff_gradient(
        |p| contrastive_loss(&p[0], &p[1], true, 1.0).unwrap(),
        &[vec![0.3, 0.0], vec![0.0, 0.0]],
        1e-4,
    )
    .unwrap();
    v.push(case("fd gradient of contrastive D2", cg[0][0], 0.6, 1e-5));
    v.push(case(
        "fd gradient of contrastive D2, y",
        cg[0][1],
        0.0,
        1e-5,
    ));
    v
}

fn rel_err(fd: &[Vec<f64>], exact: &[Vec<f64>]) -> f64 {
    let diff: f64 = fd
        .iter()
        .flatten()
        .zip(exact.iter().flatten())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let norm: f64 = exact.iter().flatten().map(|b| b * b).sum();
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

/// Largest relative error between finite-difference and closed-form
/// gradients of the contrastive and triplet losses at `points` random
/// configurations. Points within 1e-2 of a hinge are redrawn.
pub fn max_gradient_error(points: usize, seed: u64, h: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let d2 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    let sub = |a: &[f64], b: &[f64], s: f64| {
        a.iter()
            .zip(b)
            .map(|(x, y)| s * (x - y))
            .collect::<Vec<f64>>()
    };
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < points {
        let (a, p, n) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
        let margin = 1.0;
        let con_gap = margin - d2(&a, &p);
        let tri_gap = d2(&a, &p) - d2(&a, &n) + margin;
        if con_gap.abs() < 1e-2 || tri_gap.abs() < 1e-2 {
            continue;
        }
        done += 1;

        let same = finite_diff_gradient(
            |x| contrastive_loss(&x[0], &x[1], true, margin).unwrap(),
            &[a.clone(), p.clone()],
            h,
        )
        .unwrap();
        worst = worst.max(rel_err(&same, &[sub(&a, &p, 2.0), sub(&a, &p, -2.0)]));

        let diff = finite_diff_gradient(
            |x| contrastive_loss(&x[0], &x[1], false, margin).unwrap(),
            &[a.clone(), p.clone()],
            h,
        )
        .unwrap();
        let exact = if con_gap > 0.0 {
            vec![sub(&a, &p, -2.0), sub(&a, &p, 2.0)]
        } else {
            vec![vec![0.0; 3], vec![0.0; 3]]
        };
        worst = worst.max(rel_err(&diff, &exact));

        let tri = finite_diff_gradient(
            |x| triplet_loss(&x[0], &x[1], &x[2], margin).unwrap(),
            &[a.clone(), p.clone(), n.clone()],
            h,
        )
        .unwrap();
        let exact = if tri_gap > 0.0 {
            vec![sub(&n, &p, 2.0), sub(&a, &p, -2.0), sub(&a, &n, 2.0)]
        } else {
            vec![vec![0.0; 3]; 3]
        };
        worst = worst.max(rel_err(&tri, &exact));
    }
    worst
}
