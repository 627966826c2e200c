use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use feeder_core::dynamics::{gravity_torques, inertia_moments, max_payload_dynamic, max_payload_static, LinkParams};
use feeder_core::export::format_sig;
use feeder_core::kinematics::DhTable;
use feeder_sim::{load_scenario, run_headless, serve, JsonlSink};

#[derive(Parser)]
#[command(name = "sim", about = "Feeding-arm simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario headless and write run.jsonl and summary.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        duration: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the HTTP/WebSocket API while simulating in real time.
    Serve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Print holding torques and payload limits for the default links.
    Payload,
    /// Sample the reachable workspace to CSV.
    Workspace {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn payload_report(out: &mut impl Write) -> io::Result<()> {
    let p = LinkParams::<f64>::default();
    let f = |v: f64| format_sig(v, 5);
    let g = gravity_torques(&p, 0.699, true);
    writeln!(out, "holding torques, stretched arm, W_L = 0.699 N")?;
    for j in 1..4 {
        writeln!(out, "  T{}g = {} N·m", j + 1, f(g.torques[j]))?;
    }
    let (i2, i3) = inertia_moments(&p);
    writeln!(out, "inertia: I2 = {} kg·m², I3 = {} kg·m²", f(i2), f(i3))?;
    writeln!(
        out,
        "inertial torque at {} rad/s²: tau2 = {} N·m, tau3 = {} N·m",
        f(p.alpha_max),
        f(i2 * p.alpha_max),
        f(i3 * p.alpha_max)
    )?;
    for (label, r) in [("static", max_payload_static(&p)), ("dynamic", max_payload_dynamic(&p))] {
        let joint = r.binding_joint.map_or("none".to_string(), |j| j.to_string());
        writeln!(out, "{label} payload limit: W_L = {} N (joint {joint} binding)", f(r.w_l))?;
        for (j, b) in r.joint_bounds.iter().enumerate() {
            if let Some(b) = b {
                writeln!(out, "  joint {} alone: {} N", j + 1, f(*b))?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Cmd::Run { scenario, duration, out } => {
            let sc = load_scenario(&scenario)?;
            fs::create_dir_all(&out)?;
            let mut sink = JsonlSink::new(BufWriter::new(File::create(out.join("run.jsonl"))?));
            let summary = run_headless(&sc, duration, &mut sink)?;
            sink.into_inner().flush()?;
            let text = serde_json::to_string_pretty(&summary)?;
            fs::write(out.join("summary.json"), &text)?;
            println!("{text}");
        }
        Cmd::Serve {
            scenario,
            port,
            speed,
            host,
        } => {
            let sc = load_scenario(&scenario)?;
            let addr = SocketAddr::new(host, port);
            let rt = tokio::runtime::Runtime::new()?;
            eprintln!("serving {} on http://{addr} at {speed}x", sc.name);
            rt.block_on(serve(sc, addr, speed))?;
        }
        Cmd::Payload => payload_report(&mut io::stdout().lock())?,
        Cmd::Workspace { n, seed, out } => {
            let cloud = DhTable::<f64>::robot().sample_workspace(n, seed);
            let mut w = BufWriter::new(File::create(&out)?);
            cloud.write_csv(&mut w)?;
            w.flush()?;
            println!("wrote {} points to {}", cloud.count, out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
