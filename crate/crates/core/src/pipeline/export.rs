use std::fmt;
use std::str::FromStr;

use super::analysis::Analysis;
use super::config::ExportFormat;
use crate::error::{Error, Result};
use crate::ingest::xdi::{format_number, WRITER_ID};
use crate::ingest::{write_xdi, XdiTable};
use crate::model::Metadata;

/// Exportable stage outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Product {
    /// The ingested file, byte for byte.
    Original,
    Mu,
    Norm,
    Chi,
    R,
}

impl Product {
    pub const PROCESSED: [Product; 3] = [Product::Norm, Product::Chi, Product::R];

    pub fn name(self) -> &'static str {
        match self {
            Product::Original => "original",
            Product::Mu => "mu",
            Product::Norm => "norm",
            Product::Chi => "chi",
            Product::R => "r",
        }
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Product {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "original" | "raw" => Ok(Product::Original),
            "mu" => Ok(Product::Mu),
            "norm" | "normalized" => Ok(Product::Norm),
            "chi" | "k" => Ok(Product::Chi),
            "r" | "chir" => Ok(Product::R),
            other => Err(Error::params(format!("unknown product '{other}'"))),
        }
    }
}

/// Plain whitespace-separated table with `#` headers, same number format
/// as the XDI writer.
pub fn write_columnar(table: &XdiTable, header: &[(String, String)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {WRITER_ID}\n"));
    for (k, v) in header {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str("# ");
    out.push_str(&table.labels.join(" "));
    out.push('\n');
    let rows = table.columns.first().map_or(0, Vec::len);
    for r in 0..rows {
        let cells: Vec<String> = table.columns.iter().map(|c| format!("{:>20}", format_number(c[r]))).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

impl Analysis {
    /// Serialize one product. Everything except `Original` runs the stages
    /// it depends on.
    pub fn export(&mut self, product: Product, format: ExportFormat) -> Result<Vec<u8>> {
        if product == Product::Original {
            return Ok(self.source().bytes.clone());
        }
        let (table, header) = self.product_table(product)?;
        let text = match format {
            ExportFormat::Columnar => write_columnar(&table, &header),
            ExportFormat::Xdi => {
                let mut meta: Metadata = self.scan().meta.clone();
                for (k, v) in header {
                    meta.extra.insert(format!("Xaskit.{k}"), v);
                }
                write_xdi(&table, &meta, self.comments())
            }
        };
        Ok(text.into_bytes())
    }

    fn product_table(&mut self, product: Product) -> Result<(XdiTable, Vec<(String, String)>)> {
        let mut header = vec![
            ("product".to_string(), product.name().to_string()),
            ("source".to_string(), self.source().name.clone()),
        ];
        let table = match product {
            Product::Original => unreachable!("handled by export"),
            Product::Mu => {
                let mu = self.mu()?;
                header.push(("mode".into(), mu.mode.to_string()));
                XdiTable::from_spectrum(&mu.spectrum)
            }
            Product::Norm => {
                let e0 = self.e0()?.e0;
                let engine = self.config().background.engine;
                self.background()?;
                let spectrum = self.mu()?.spectrum.clone();
                let bg = self.background()?;
                let e = spectrum.energy();
                header.push(("e0".into(), format_number(e0)));
                header.push(("edge_step".into(), format_number(bg.edge_step)));
                header.push(("engine".into(), engine.to_string()));
                use crate::background::Background;
                XdiTable::new(
                    ["energy", "mu", "pre_edge", "post_edge", "background", "norm"].map(String::from).to_vec(),
                    vec![
                        e.to_vec(),
                        spectrum.mu().to_vec(),
                        bg.pre.eval_many(e),
                        bg.norm_model.eval_many(e),
                        bg.post.eval_many(e),
                        bg.normalized.mu_corrected.clone(),
                    ],
                )?
            }
            Product::Chi => {
                let e0 = self.e0()?.e0;
                let n = self.config().chi.k_weight;
                self.ft()?;
                let chi = self.chi()?.clone();
                let ft = self.ft()?;
                let w = crate::exafs::window(chi.weighted.k(), &ft.r.window)?;
                header.push(("e0".into(), format_number(e0)));
                header.push(("k_weight".into(), n.to_string()));
                XdiTable::new(
                    vec!["k".into(), "chi".into(), format!("chik{n}"), format!("chik{n}_filtered"), "window".into()],
                    vec![
                        chi.chi.k().to_vec(),
                        chi.chi.chi().to_vec(),
                        chi.weighted.chi().to_vec(),
                        ft.filtered.chi().to_vec(),
                        w,
                    ],
                )?
            }
            Product::R => {
                let e0 = self.e0()?.e0;
                let n = self.config().chi.k_weight;
                let ft = self.ft()?;
                let w = ft.r.window;
                header.push(("e0".into(), format_number(e0)));
                header.push(("k_weight".into(), n.to_string()));
                header.push(("window".into(), format!("{:?}", w.kind).to_lowercase()));
                header.push(("k_range".into(), format!("{} {}", format_number(w.k_min), format_number(w.k_max))));
                header.push(("dk".into(), format_number(w.dk)));
                header.push(("r_bkg".into(), format_number(ft.r.params.r_bkg)));
                XdiTable::new(
                    ["r", "chir_mag", "chir_re", "chir_im", "chir_mag_filtered"].map(String::from).to_vec(),
                    vec![ft.r.r.clone(), ft.r.magnitude(), ft.r.real(), ft.r.imag(), ft.r_filtered.magnitude()],
                )?
            }
        };
        Ok((table, header))
    }
}
