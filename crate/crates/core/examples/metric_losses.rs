//! Evaluates each metric-learning loss on a tiny batch and checks one
//! gradient against finite differences.
//!
//! ```text
//! cargo run --example metric_losses
//! ```

use ensemble_forge::losses::{
    contrastive_loss, finite_diff_gradient, gaussian_kernel, nngk_class_prob, nngk_loss,
    proxy_anchor_loss, softtriple_loss, supcon_loss, triplet_loss, Center, CenterSet,
    EmbeddingBatch, ProxySet, SoftTripleParams, SupConParams,
};
use ensemble_forge::LabelId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = vec![0.0, 0.0];
    let p = vec![0.3, 0.4];
    let n = vec![1.0, 1.0];

    println!(
        "contrastive same  {:.6}",
        contrastive_loss(&a, &p, true, 1.0)?
    );
    println!(
        "contrastive diff  {:.6}",
        contrastive_loss(&a, &p, false, 1.0)?
    );
    println!("triplet           {:.6}", triplet_loss(&a, &p, &n, 0.5)?);
    println!("kernel            {:.6}", gaussian_kernel(&a, &p, 1.0)?);

    let centers = CenterSet::new(
        vec![
            Center {
                vector: p.clone(),
                label: LabelId(0),
                weight: 1.0,
            },
            Center {
                vector: n.clone(),
                label: LabelId(1),
                weight: 1.0,
            },
        ],
        1.0,
    )?;
    let prob = nngk_class_prob(&a, &centers, LabelId(0))?;
    println!(
        "nngk              p = {prob:.6}, loss {:.6}",
        nngk_loss(prob)?
    );

    let batch = EmbeddingBatch::from_parts(
        vec![
            vec![1.0, 0.1],
            vec![0.9, -0.2],
            vec![-0.1, 1.0],
            vec![0.2, 0.8],
        ],
        vec![LabelId(0), LabelId(0), LabelId(1), LabelId(1)],
    )?;
    let proxies = ProxySet::with_defaults(vec![
        (vec![1.0, 0.0], LabelId(0)),
        (vec![0.0, 1.0], LabelId(1)),
    ])?;
    println!(
        "proxy anchor      {:.6}",
        proxy_anchor_loss(&batch, &proxies)?
    );

    let st = SoftTripleParams::with_defaults(vec![
        vec![vec![1.0, 0.0], vec![0.8, 0.2]],
        vec![vec![0.0, 1.0], vec![0.2, 0.8]],
    ])?;
    println!(
        "softtriple        {:.6}",
        softtriple_loss(&batch.items()[0].vector, LabelId(0), &st)?
    );
    println!(
        "supcon            {:.6}",
        supcon_loss(&batch, &SupConParams::default())?
    );

    // d/dx_p of |x_p - x_n|^2 is 2 (x_p - x_n)
    let grad = finite_diff_gradient(
        |pts| contrastive_loss(&pts[0], &pts[1], true, 1.0).unwrap_or(f64::NAN),
        &[p.clone(), a.clone()],
        1e-4,
    )?;
    println!("gradient wrt x_p  {:?} (closed form [0.6, 0.8])", grad[0]);
    Ok(())
}
