use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use quasi_core::metrics::{cnr, msr, psnr, ssim, SSIM_WINDOW};
use quasi_core::noise::{make_sequence, NoiseKind, NoiseSpec};
use quasi_core::phantom::{make_phantom, PhantomKind, PhantomSpec};
use quasi_core::{Dims, VolumeSequence};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::fsutil::write_atomic;
use crate::pgm::{read_pgm_stack, write_pgm_stack};
use crate::pipeline::{denoise, trace_csv};
use crate::qvol::{read_qvol, write_qvol};
use crate::region::read_regions;

#[derive(Debug, Parser)]
#[command(name = "quasi", version, about = "Quantile-sparse variational denoising")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PhantomArg {
    Layered,
    Ellipsoids,
    Blocks,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    Awgn,
    Poisson,
    Speckle,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic ground truth and a noisy sequence of it.
    Simulate {
        /// Ground-truth output (.qvol).
        #[arg(long)]
        truth: PathBuf,
        /// Noisy sequence output (.qvol).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "layered")]
        phantom: PhantomArg,
        #[arg(long, default_value_t = 128)]
        nx: usize,
        #[arg(long, default_value_t = 128)]
        ny: usize,
        #[arg(long, default_value_t = 1)]
        nz: usize,
        /// Number of noisy frames T.
        #[arg(long, default_value_t = 5)]
        frames: usize,
        #[arg(long, value_enum, default_value = "awgn")]
        noise: NoiseArg,
        /// Noise level for awgn and speckle.
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 100.0)]
        photon_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated intensity table; defaults depend on the phantom.
        #[arg(long, value_delimiter = ',')]
        intensities: Option<Vec<f64>>,
        /// Block side for the blocks phantom.
        #[arg(long, default_value_t = 8)]
        block: usize,
    },
    /// Denoise a registered sequence.
    Denoise {
        /// Input .qvol file or directory of .pgm slices.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output .qvol file, or a directory for .pgm slices.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Clean volume; adds a psnr column to the trace.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Energy trace output (.csv).
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Print quality measures as CSV rows `metric,value,scope`.
    Metrics {
        /// Image to score.
        #[arg(long = "in")]
        input: PathBuf,
        /// Clean volume for PSNR and SSIM.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Region file for MSR and CNR.
        #[arg(long)]
        regions: Option<PathBuf>,
        /// Frame of a multi-frame input to score.
        #[arg(long, default_value_t = 0)]
        frame: usize,
        #[arg(long, default_value_t = 1.0)]
        peak: f64,
    },
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate {
            truth,
            out,
            phantom,
            nx,
            ny,
            nz,
            frames,
            noise,
            sigma,
            photon_scale,
            seed,
            intensities,
            block,
        } => {
            let dims = Dims::new(nx, ny, nz)?;
            let (kind, default_table) = match phantom {
                PhantomArg::Layered => (PhantomKind::LayeredSlab, PhantomSpec::layered(dims, seed).intensities),
                PhantomArg::Ellipsoids => (PhantomKind::NestedEllipsoids, vec![0.1, 0.5, 0.8, 0.3]),
                PhantomArg::Blocks => (PhantomKind::Blocks { block }, vec![0.1, 0.4, 0.7, 0.9]),
            };
            let spec = PhantomSpec {
                kind,
                dims,
                intensities: intensities.unwrap_or(default_table),
                seed,
            };
            let clean = make_phantom(&spec)?;
            let kind = match noise {
                NoiseArg::Awgn => NoiseKind::Awgn { sigma },
                NoiseArg::Poisson => NoiseKind::Poisson { photon_scale },
                NoiseArg::Speckle => NoiseKind::Speckle { sigma },
            };
            // decorrelate the noise stream from the phantom jitter
            let noisy = make_sequence(&clean, frames, &NoiseSpec { kind, seed: seed ^ 0x9e37_79b9_7f4a_7c15 })?;
            write_qvol(&VolumeSequence::single(clean), &truth)?;
            write_qvol(&noisy, &out)
        }
        Command::Denoise {
            input,
            out,
            config,
            reference,
            trace,
        } => {
            let inputs = read_input(&input)?;
            let text = match &config {
                Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
                None => String::new(),
            };
            let resolved = RunConfig::parse(&text)?.resolve(inputs.len())?;
            let reference = reference.as_deref().map(read_input).transpose()?;
            let result = denoise(&inputs, &resolved, reference.as_ref())?;
            write_output(&result.result, &out)?;
            if let Some(p) = trace {
                write_atomic(&p, trace_csv(&result.trace).as_bytes())?;
            }
            Ok(())
        }
        Command::Metrics {
            input,
            reference,
            regions,
            frame,
            peak,
        } => {
            let seq = read_input(&input)?;
            if frame >= seq.len() {
                return Err(CliError::Usage(format!("frame {frame} out of range (T = {})", seq.len())));
            }
            let vol = seq.frame(frame);
            let mut rows = String::from("metric,value,scope\n");
            if let Some(r) = &reference {
                let rseq = read_input(r)?;
                let rvol = rseq.frame(if rseq.len() == 1 { 0 } else { frame.min(rseq.len() - 1) });
                rows.push_str(&format!("psnr,{},all\n", psnr(rvol, vol, peak)?));
                let d = vol.dims();
                if d.nx >= SSIM_WINDOW && d.ny >= SSIM_WINDOW {
                    rows.push_str(&format!("ssim,{},all\n", ssim(rvol, vol, peak)?));
                } else {
                    eprintln!("note: ssim skipped, slices are smaller than {SSIM_WINDOW}x{SSIM_WINDOW}");
                }
            }
            if let Some(p) = &regions {
                let regs = read_regions(p)?;
                rows.push_str(&format!("msr,{},fg\n", msr(vol, &regs.fg)?));
                if let Some(bg) = &regs.bg {
                    rows.push_str(&format!("cnr,{},fg/bg\n", cnr(vol, &regs.fg, bg)?));
                }
            }
            if reference.is_none() && regions.is_none() {
                return Err(CliError::Usage("metrics needs --reference and/or --regions".into()));
            }
            print!("{rows}");
            Ok(())
        }
    }
}

fn is_qvol(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("qvol"))
}

/// A `.qvol` file, or a directory of `.pgm` slices read as one frame.
pub fn read_input(path: &Path) -> CliResult<VolumeSequence> {
    if path.is_dir() {
        Ok(VolumeSequence::single(read_pgm_stack(path)?))
    } else {
        read_qvol(path)
    }
}

/// `.qvol` paths get the whole sequence; anything else is a directory of
/// 16-bit slices, with one subdirectory per frame when there are several.
pub fn write_output(seq: &VolumeSequence, path: &Path) -> CliResult<()> {
    if is_qvol(path) {
        return write_qvol(seq, path);
    }
    if seq.len() == 1 {
        return write_pgm_stack(seq.frame(0), path, u16::MAX);
    }
    for (t, f) in seq.frames().iter().enumerate() {
        write_pgm_stack(f, &path.join(format!("frame_{t:04}")), u16::MAX)?;
    }
    Ok(())
}
