pub mod roe_oracle;
