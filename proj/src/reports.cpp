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


#include "hiertkg/reports.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hiertkg/errors.hpp"
#include "json.hpp"

namespace hiertkg::reports {
namespace {

using nlohmann::ordered_json;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream o(path);
  if (!o) throw IoError("cannot write " + path.string());
  o << text;
  if (!o) throw IoError("failed writing " + path.string());
}

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<size_t>(w * h * 3), 255) {}
  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    auto* p = &px_[static_cast<size_t>((y * w_ + x) * 3)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }
  void line(double x0, double y0, double x1, double y1, Rgb c, int width) {
    const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int steps = std::max(1, static_cast<int>(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      for (int dx = -(width / 2); dx <= width / 2; ++dx) {
        for (int dy = -(width / 2); dy <= width / 2; ++dy) set(x + dx, y + dy, c);
      }
    }
  }
  void save(const std::filesystem::path& path) const {
    FILE* f = std::fopen(path.string().c_str(), "wb");
    if (f == nullptr) throw IoError("cannot write " + path.string());
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr || setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      std::fclose(f);
      throw IoError("libpng failed writing " + path.string());
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w_),
                 static_cast<png_uint_32>(h_), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h_; ++y) {
      png_write_row(png, const_cast<png_bytep>(
                             &px_[static_cast<size_t>(y * w_ * 3)]));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

struct Series {
  std::vector<double> x, y;
};

// Plots series into the rectangle [left, left+w) x [top, top+h).
void panel(Canvas& c, int left, int top, int w, int h,
           const std::vector<std::pair<Series, Rgb>>& series) {
  constexpr Rgb kAxis{60, 60, 60}, kGrid{225, 225, 225};
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [s, col] : series) {
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (xmin > xmax) return;
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-9) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  for (int g = 0; g <= 4; ++g) {
    const double y = top + h * g / 4.0;
    c.line(left, y, left + w, y, kGrid, 1);
  }
  c.line(left, top, left, top + h, kAxis, 1);
  c.line(left, top + h, left + w, top + h, kAxis, 1);
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * w; };
  auto py = [&](double y) { return top + h - (y - ymin) / (ymax - ymin) * h; };
  for (const auto& [s, col] : series) {
    for (size_t i = 0; i + 1 < s.x.size(); ++i) {
      c.line(px(s.x[i]), py(s.y[i]), px(s.x[i + 1]), py(s.y[i + 1]), col, 2);
    }
    for (size_t i = 0; i < s.x.size(); ++i) {
      c.line(px(s.x[i]) - 2, py(s.y[i]), px(s.x[i]) + 2, py(s.y[i]), col, 3);
    }
  }
}

}  // namespace

std::string to_jsonl(const std::vector<metrics::MetricReport>& history) {
  std::string out;
  for (const metrics::MetricReport& r : history) {
    ordered_json j;
    j["split"] = r.split;
    j["epoch"] = r.epoch;
    j["loss"] = r.loss;
    j["ap"] = r.ap;
    j["auc"] = r.auc;
    j["mrr"] = r.mrr;
    j["n_queries"] = r.n_queries;
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::vector<metrics::MetricReport> parse_jsonl(const std::string& text) {
  std::vector<metrics::MetricReport> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      metrics::MetricReport r;
      r.split = j.at("split").get<std::string>();
      r.epoch = j.at("epoch").get<int>();
      r.loss = j.at("loss").get<double>();
      r.ap = j.at("ap").get<double>();
      r.auc = j.at("auc").get<double>();
      r.mrr = j.at("mrr").get<double>();
      r.n_queries = j.at("n_queries").get<std::int64_t>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(lineno), e.what());
    }
  }
  return out;
}

std::string history_csv(const std::vector<metrics::MetricReport>& history) {
  std::map<int, const metrics::MetricReport*> train, val;
  for (const metrics::MetricReport& r : history) {
    if (r.split == "train") train[r.epoch] = &r;
    if (r.split == "val") val[r.epoch] = &r;
  }
  std::string out =
      "epoch,train_loss,val_loss,train_auc,val_auc,train_ap,val_ap,"
      "train_mrr,val_mrr\n";
  for (const auto& [epoch, t] : train) {
    auto it = val.find(epoch);
    const metrics::MetricReport* v = it == val.end() ? nullptr : it->second;
    auto cell = [&](double metrics::MetricReport::*field,
                    const metrics::MetricReport* r) {
      return r == nullptr ? std::string() : fmt(r->*field);
    };
    out += std::to_string(epoch) + "," + cell(&metrics::MetricReport::loss, t) +
           "," + cell(&metrics::MetricReport::loss, v) + "," +
           cell(&metrics::MetricReport::auc, t) + "," +
           cell(&metrics::MetricReport::auc, v) + "," +
           cell(&metrics::MetricReport::ap, t) + "," +
           cell(&metrics::MetricReport::ap, v) + "," +
           cell(&metrics::MetricReport::mrr, t) + "," +
           cell(&metrics::MetricReport::mrr, v) + "\n";
  }
  return out;
}

void write_plot_png(const std::vector<metrics::MetricReport>& history,
                    const std::filesystem::path& path) {
  constexpr Rgb kTrain{31, 119, 180}, kVal{255, 127, 14};
  Series tl, vl, ta, va;
  for (const metrics::MetricReport& r : history) {
    if (r.split == "train") {
      tl.x.push_back(r.epoch);
      tl.y.push_back(r.loss);
      ta.x.push_back(r.epoch);
      ta.y.push_back(r.auc);
    } else if (r.split == "val") {
      vl.x.push_back(r.epoch);
      vl.y.push_back(r.loss);
      va.x.push_back(r.epoch);
      va.y.push_back(r.auc);
    }
  }
  Canvas c(960, 400);
  panel(c, 50, 30, 400, 320, {{tl, kTrain}, {vl, kVal}});
  panel(c, 530, 30, 400, 320, {{ta, kTrain}, {va, kVal}});
  c.save(path);
}

void emit_reports(const std::vector<metrics::MetricReport>& history,
                  const std::filesystem::path& dir, bool plot) {
  if (history.empty()) throw ConfigError("no metric history to report");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "metrics.jsonl", to_jsonl(history));
  write_text(dir / "history.csv", history_csv(history));
  if (plot) write_plot_png(history, dir / "loss_auc.png");
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out =
      "scenario,val_ap,test_ap,val_auc,test_auc,val_mrr,test_mrr\n";
  for (const AblationRow& r : rows) {
    out += r.scenario + "," + fmt(r.val_ap) + "," + fmt(r.test_ap) + "," +
           fmt(r.val_auc) + "," + fmt(r.test_auc) + "," + fmt(r.val_mrr) +
           "," + fmt(r.test_mrr) + "\n";
  }
  return out;
}

}  // namespace hiertkg::reports
