// Copyright 2026 The HierTKG Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Metric history serialisation and plots.

#ifndef HIERTKG_REPORTS_HPP_
#define HIERTKG_REPORTS_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "hiertkg/metrics.hpp"
#include "hiertkg/runner.hpp"

namespace hiertkg::reports {

// One JSON object per line with split, epoch, loss, ap, auc, mrr and
// n_queries.
std::string to_jsonl(const std::vector<metrics::MetricReport>& history);
std::vector<metrics::MetricReport> parse_jsonl(const std::string& text);

// epoch,train_loss,val_loss,train_auc,val_auc,train_ap,val_ap,train_mrr,
// val_mrr; one row per epoch with a train entry. Missing values are empty.
std::string history_csv(const std::vector<metrics::MetricReport>& history);

// Loss (left) and AUC (right) against epoch; train in blue, val in orange.
void write_plot_png(const std::vector<metrics::MetricReport>& history,
                    const std::filesystem::path& path);

// metrics.jsonl, history.csv and (when `plot`) loss_auc.png under `dir`.
// Throws ConfigError for an empty history and IoError if `dir` cannot be
// created or written.
void emit_reports(const std::vector<metrics::MetricReport>& history,
                  const std::filesystem::path& dir, bool plot);

std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace hiertkg::reports

#endif  // HIERTKG_REPORTS_HPP_
