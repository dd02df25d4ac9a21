use clap::{Args, Subcommand};
use padicprob::padic::{self, PAdicApprox, Valuation};
use padicprob::PrimeBase;

use crate::common::{parse_rational_arg, usage, CmdResult};

#[derive(Subcommand)]
pub enum PadicOp {
    /// Print the canonical digit expansion of a rational
    Expand(UnaryArgs),
    /// Print the p-adic norm |q|_p as an exact rational
    Norm(UnaryArgs),
    /// Print the p-adic valuation v_p(q)
    Valuation(UnaryArgs),
    /// Print the p-adic distance |a - b|_p
    Distance(BinaryArgs),
    /// Add two expansions at the working precision
    Add(BinaryArgs),
    /// Subtract b from a at the working precision
    Sub(BinaryArgs),
    /// Multiply two expansions at the working precision
    Mul(BinaryArgs),
    /// Divide a by b at the working precision
    Div(BinaryArgs),
    /// Square root by Hensel lifting, when one exists
    Sqrt(UnaryArgs),
}

#[derive(Args)]
pub struct UnaryArgs {
    /// Prime base p
    #[arg(short, long)]
    pub prime: u64,
    /// Rational operand, e.g. -1 or 5/3
    #[arg(short = 'q', long, allow_hyphen_values = true)]
    pub value: String,
    /// Digits of working precision
    #[arg(short = 'k', long, default_value_t = 8)]
    pub digits: usize,
}

#[derive(Args)]
pub struct BinaryArgs {
    /// Prime base p
    #[arg(short, long)]
    pub prime: u64,
    /// Left operand
    #[arg(short, long, allow_hyphen_values = true)]
    pub a: String,
    /// Right operand
    #[arg(short, long, allow_hyphen_values = true)]
    pub b: String,
    /// Digits of working precision
    #[arg(short = 'k', long, default_value_t = 8)]
    pub digits: usize,
}

fn expand(base: PrimeBase, text: &str, digits: usize) -> CmdResult<PAdicApprox> {
    let q = parse_rational_arg(text)?;
    Ok(padic::to_digits(&q, base, digits))
}

pub fn run(op: PadicOp) -> CmdResult<()> {
    match op {
        PadicOp::Expand(args) => {
            let base = PrimeBase::new(args.prime)?;
            println!("{}", expand(base, &args.value, args.digits)?.render());
        }
        PadicOp::Norm(args) => {
            let base = PrimeBase::new(args.prime)?;
            let q = parse_rational_arg(&args.value)?;
            println!("{}", padic::format_rational(&padic::norm(&q, base)));
        }
        PadicOp::Valuation(args) => {
            let base = PrimeBase::new(args.prime)?;
            let q = parse_rational_arg(&args.value)?;
            match padic::valuation(&q, base) {
                Valuation::Finite(v) => println!("{v}"),
                Valuation::Infinite => println!("infinity"),
            }
        }
        PadicOp::Distance(args) => {
            let base = PrimeBase::new(args.prime)?;
            let a = parse_rational_arg(&args.a)?;
            let b = parse_rational_arg(&args.b)?;
            println!("{}", padic::format_rational(&padic::distance(&a, &b, base)));
        }
        PadicOp::Add(args) => binary(args, |x, y| x.add(y))?,
        PadicOp::Sub(args) => binary(args, |x, y| x.sub(y))?,
        PadicOp::Mul(args) => binary(args, |x, y| x.mul(y))?,
        PadicOp::Div(args) => binary(args, |x, y| x.div(y))?,
        PadicOp::Sqrt(args) => {
            let base = PrimeBase::new(args.prime)?;
            let q = parse_rational_arg(&args.value)?;
            match padic::hensel_sqrt(&q, base, args.digits)? {
                Some(root) => println!("{}", root.render()),
                None => println!("no square root in Q_{}", args.prime),
            }
        }
    }
    Ok(())
}

fn binary(
    args: BinaryArgs,
    op: impl Fn(&PAdicApprox, &PAdicApprox) -> Result<PAdicApprox, padic::PadicError>,
) -> CmdResult<()> {
    let base = PrimeBase::new(args.prime)?;
    if args.digits == 0 {
        return Err(usage("working precision must be at least 1 digit"));
    }
    let x = expand(base, &args.a, args.digits)?;
    let y = expand(base, &args.b, args.digits)?;
    println!("{}", op(&x, &y)?.render());
    Ok(())
}
