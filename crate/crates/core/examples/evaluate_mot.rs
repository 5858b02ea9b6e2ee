//! Scores a tracker output against ground truth with CLEAR MOT and IDF1.
//! Without arguments it scores a small built-in example with one identity
//! switch and one missed box.
//!
//! ```text
//! cargo run --release --example evaluate_mot -- gt.txt hyp.txt
//! ```

use liftrack::mot::{evaluate_clear_mot, parse_mot, read_mot, MATCH_IOU};

const GT: &str = "\
1,1,10,10,20,40,1,-1,-1,-1
2,1,12,10,20,40,1,-1,-1,-1
3,1,14,10,20,40,1,-1,-1,-1
4,1,16,10,20,40,1,-1,-1,-1
1,2,100,10,20,40,1,-1,-1,-1
2,2,100,10,20,40,1,-1,-1,-1
3,2,100,10,20,40,1,-1,-1,-1
4,2,100,10,20,40,1,-1,-1,-1
";

const HYP: &str = "\
1,7,11,10,20,40,1,-1,-1,-1
2,7,12,11,20,40,1,-1,-1,-1
3,9,14,10,20,40,1,-1,-1,-1
4,9,16,10,20,40,1,-1,-1,-1
1,8,100,10,20,40,1,-1,-1,-1
2,8,101,10,20,40,1,-1,-1,-1
4,8,100,10,20,40,1,-1,-1,-1
";

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (gt, hyp) = match &args[..] {
        [g, h] => (read_mot(g.as_ref())?, read_mot(h.as_ref())?),
        [] => (parse_mot(GT, "gt".as_ref())?, parse_mot(HYP, "hyp".as_ref())?),
        _ => anyhow::bail!("usage: evaluate_mot [GT HYP]"),
    };
    let r = evaluate_clear_mot(&gt, &hyp, MATCH_IOU)?;
    println!("MOTA {:.3}  MOTP {:.3}  IDF1 {:.3}", r.mota, r.motp, r.idf1);
    println!("IDs {}  FP {}  FN {}  MT {}  ML {}", r.ids, r.fp, r.fn_, r.mt, r.ml);
    Ok(())
}
