/* Copyright 2026 The drivemt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "drivemt/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "drivemt/error.hpp"
#include "text_util.hpp"

namespace drivemt {

namespace {

std::string angle_text(double degrees) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f deg", degrees);
  return buf;
}

void paste(cv::Mat& canvas, const Image& img, int top, int left, int h, int w) {
  if (img.channels() != 3) throw DimensionError("grid frames must be RGB");
  const Image small = resize_bilinear(img, h, w);
  for (int y = 0; y < h; ++y) {
    auto* row = canvas.ptr<cv::Vec3b>(top + y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp(small.at(y, x, c), 0.0f, 1.0f);
        row[left + x][c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  }
}

}  // namespace

Image render_grid(std::span<const GridRow> rows, int cell_height, int cell_width) {
  if (rows.empty()) throw EmptyInputError("grid needs at least one row");
  const int caption = 18;
  const int row_h = cell_height + caption;
  cv::Mat canvas(static_cast<int>(rows.size()) * row_h, 2 * cell_width, CV_8UC3, cv::Scalar(0, 0, 0));
  const cv::Scalar red(255, 40, 40), green(40, 220, 40), white(255, 255, 255);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int top = static_cast<int>(i) * row_h;
    paste(canvas, rows[i].original, top + caption, 0, cell_height, cell_width);
    paste(canvas, rows[i].transformed, top + caption, cell_width, cell_height, cell_width);
    const auto font = cv::FONT_HERSHEY_SIMPLEX;
    cv::putText(canvas, rows[i].frame_id, {4, top + 13}, font, 0.4, white, 1, cv::LINE_8);
    const auto a = angle_text(rows[i].angle_original);
    const auto b = angle_text(rows[i].angle_transformed);
    cv::putText(canvas, a, {cell_width - 80, top + 13}, font, 0.4, red, 1, cv::LINE_8);
    cv::putText(canvas, b, {2 * cell_width - 80, top + 13}, font, 0.4, green, 1, cv::LINE_8);
  }
  Image out(canvas.rows, canvas.cols, 3);
  for (int y = 0; y < canvas.rows; ++y) {
    const auto* row = canvas.ptr<cv::Vec3b>(y);
    for (int x = 0; x < canvas.cols; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = row[x][c] / 255.0f;
    }
  }
  return out;
}

std::size_t ReportTable::cell_count() const {
  std::size_t n = 0;
  for (const auto& s : counts)
    for (const auto& m : s)
      for (const auto& c : m) n += c.has_value();
  return n;
}

ReportTable aggregate_reports(std::span<const InconsistencyReport> reports) {
  ReportTable t;
  auto index_of_value = [](auto& list, const auto& v) {
    auto it = std::find(list.begin(), list.end(), v);
    if (it == list.end()) {
      list.push_back(v);
      return list.size() - 1;
    }
    return static_cast<std::size_t>(it - list.begin());
  };
  for (const auto& r : reports) {
    index_of_value(t.scenes, r.scene_id);
    index_of_value(t.models, r.model_id);
    for (const auto& row : r.rows) index_of_value(t.epsilons, row.epsilon);
  }
  std::sort(t.epsilons.begin(), t.epsilons.end());
  t.counts.assign(t.scenes.size(),
                  std::vector<std::vector<std::optional<std::size_t>>>(
                      t.models.size(), std::vector<std::optional<std::size_t>>(t.epsilons.size())));
  t.totals.assign(t.scenes.size(), std::vector<std::size_t>(t.models.size(), 0));
  for (const auto& r : reports) {
    const auto s = index_of_value(t.scenes, r.scene_id);
    const auto m = index_of_value(t.models, r.model_id);
    for (const auto& row : r.rows) {
      const auto e = static_cast<std::size_t>(
          std::find(t.epsilons.begin(), t.epsilons.end(), row.epsilon) - t.epsilons.begin());
      auto& cell = t.counts[s][m][e];
      if (cell) {
        throw DataError("duplicate report cell for model " + r.model_id + ", scene " + r.scene_id +
                        ", epsilon " + detail::format_double(row.epsilon));
      }
      if (t.totals[s][m] != 0 && t.totals[s][m] != row.total_frames) {
        throw DataError("inconsistent frame totals for model " + r.model_id + ", scene " +
                        r.scene_id);
      }
      cell = row.count;
      t.totals[s][m] = row.total_frames;
    }
  }
  return t;
}

void write_table_csv(const std::filesystem::path& path, const ReportTable& t) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "scene_id,model_id,total_frames";
  for (double e : t.epsilons) out << ",eps_" << detail::format_double(e);
  out << '\n';
  for (std::size_t s = 0; s < t.scenes.size(); ++s) {
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      const auto& cells = t.counts[s][m];
      if (std::none_of(cells.begin(), cells.end(), [](const auto& c) { return c.has_value(); })) {
        continue;
      }
      out << t.scenes[s] << ',' << t.models[m] << ',' << t.totals[s][m];
      for (const auto& c : cells) {
        out << ',';
        if (c) out << *c;
      }
      out << '\n';
    }
  }
}

void write_table_markdown(const std::filesystem::path& path, const ReportTable& t) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "| scene | model | frames |";
  for (double e : t.epsilons) out << " " << detail::format_double(e) << " deg |";
  out << "\n|---|---|---|";
  for (std::size_t i = 0; i < t.epsilons.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t s = 0; s < t.scenes.size(); ++s) {
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      const auto& cells = t.counts[s][m];
      if (std::none_of(cells.begin(), cells.end(), [](const auto& c) { return c.has_value(); })) {
        continue;
      }
      out << "| " << t.scenes[s] << " | " << t.models[m] << " | " << t.totals[s][m] << " |";
      for (const auto& c : cells) out << ' ' << (c ? std::to_string(*c) : std::string("-")) << " |";
      out << '\n';
    }
  }
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axes {
  double x0, x1, y0, y1;
  double left = 60, right = 180, top = 30, bottom = 40, width = 640, height = 360;
  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void frame(std::ostringstream& out, const Axes& a, const std::string& title, const std::string& xl,
           const std::string& yl) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << a.width << "\" height=\""
      << a.height << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << a.width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(title) << "</text>\n"
      << "<line x1=\"" << a.left << "\" y1=\"" << fmt(a.py(a.y0)) << "\" x2=\"" << a.width - a.right
      << "\" y2=\"" << fmt(a.py(a.y0)) << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << a.left << "\" y1=\"" << a.top << "\" x2=\"" << a.left << "\" y2=\""
      << fmt(a.py(a.y0)) << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << fmt((a.left + a.width - a.right) / 2) << "\" y=\"" << a.height - 8
      << "\" text-anchor=\"middle\">" << xml_escape(xl) << "</text>\n"
      << "<text x=\"14\" y=\"" << fmt(a.height / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << fmt(a.height / 2) << ")\">" << xml_escape(yl) << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = a.y0 + (a.y1 - a.y0) * i / 4.0;
    out << "<text x=\"" << a.left - 6 << "\" y=\"" << fmt(a.py(y) + 4) << "\" text-anchor=\"end\">"
        << fmt(y) << "</text>\n";
  }
}

void series(std::ostringstream& out, const Axes& a, const std::vector<std::pair<double, double>>& pts,
            const char* colour, const std::string& label, int slot, bool markers) {
  out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
  for (const auto& [x, y] : pts) out << fmt(a.px(x)) << ',' << fmt(a.py(y)) << ' ';
  out << "\"/>\n";
  if (markers) {
    for (const auto& [x, y] : pts) {
      out << "<circle cx=\"" << fmt(a.px(x)) << "\" cy=\"" << fmt(a.py(y)) << "\" r=\"3\" fill=\""
          << colour << "\"/>\n";
    }
  }
  const double ly = a.top + 14.0 * slot;
  out << "<rect x=\"" << a.width - a.right + 10 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
      << colour << "\"/>\n<text x=\"" << a.width - a.right + 24 << "\" y=\"" << ly << "\">"
      << xml_escape(label) << "</text>\n";
}

}  // namespace

std::string counts_plot_svg(const ReportTable& t) {
  Axes a{0, 1, 0, 1};
  if (!t.epsilons.empty()) {
    a.x0 = t.epsilons.front();
    a.x1 = t.epsilons.size() > 1 ? t.epsilons.back() : a.x0 + 1.0;
  }
  std::size_t peak = 1;
  for (const auto& s : t.counts)
    for (const auto& m : s)
      for (const auto& c : m)
        if (c) peak = std::max(peak, *c);
  a.y1 = static_cast<double>(peak);
  std::ostringstream out;
  frame(out, a, "Inconsistent frames per error bound", "error bound (degrees)", "count");
  for (double e : t.epsilons) {
    out << "<text x=\"" << fmt(a.px(e)) << "\" y=\"" << fmt(a.py(0) + 14)
        << "\" text-anchor=\"middle\">" << detail::format_double(e) << "</text>\n";
  }
  int slot = 0;
  for (std::size_t s = 0; s < t.scenes.size(); ++s) {
    for (std::size_t m = 0; m < t.models.size(); ++m) {
      std::vector<std::pair<double, double>> pts;
      for (std::size_t e = 0; e < t.epsilons.size(); ++e) {
        if (t.counts[s][m][e]) pts.emplace_back(t.epsilons[e], double(*t.counts[s][m][e]));
      }
      if (pts.empty()) continue;
      series(out, a, pts, kPalette[slot % 8], t.models[m] + " / " + t.scenes[s], slot, true);
      ++slot;
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string predictions_plot_svg(std::span<const PredictionPair> pairs, const std::string& title) {
  Axes a{0, std::max<double>(1.0, double(pairs.size()) - 1.0), -1, 1};
  for (const auto& p : pairs) {
    a.y0 = std::min({a.y0, p.angle_original, p.angle_transformed});
    a.y1 = std::max({a.y1, p.angle_original, p.angle_transformed});
  }
  std::ostringstream out;
  frame(out, a, title, "frame", "steering (degrees)");
  std::vector<std::pair<double, double>> orig, trans;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    orig.emplace_back(double(i), pairs[i].angle_original);
    trans.emplace_back(double(i), pairs[i].angle_transformed);
  }
  series(out, a, orig, "#d62728", "original", 0, false);
  series(out, a, trans, "#2ca02c", "transformed", 1, false);
  out << "</svg>\n";
  return out.str();
}

}  // namespace drivemt
