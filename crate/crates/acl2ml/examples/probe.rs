use acl2ml::corpus::Corpus;
use acl2ml::features::extract_vector;
use acl2ml::valuation::compute_valuation;

fn main() {
    let c = Corpus::with_prelude(acl2ml::corpora::MINI_CORPUS).unwrap();
    let v = compute_valuation(&c, 0).unwrap();
    let defs: Vec<_> = c.definitions().collect();
    let raw: Vec<Vec<f64>> = defs
        .iter()
        .map(|d| extract_vector(&d.body, &v.with_self(d)).unwrap().to_f64())
        .collect();
    // min-max normalize like the clusterer does
    let dim = raw[0].len();
    let mut lo = vec![f64::MAX; dim];
    let mut hi = vec![f64::MIN; dim];
    for r in &raw {
        for (j, x) in r.iter().enumerate() {
            lo[j] = lo[j].min(*x);
            hi[j] = hi[j].max(*x);
        }
    }
    let norm: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(j, x)| if hi[j] > lo[j] { (x - lo[j]) / (hi[j] - lo[j]) } else { 0.0 })
                .collect()
        })
        .collect();
    let d = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    };
    print!("{:>12}", "");
    for def in &defs {
        print!("{:>7.6}", def.name.as_str());
    }
    println!();
    for (i, di) in defs.iter().enumerate() {
        print!("{:>12.12}", di.name.as_str());
        for j in 0..defs.len() {
            print!("{:>7.2}", d(&norm[i], &norm[j]));
        }
        println!();
    }
}
