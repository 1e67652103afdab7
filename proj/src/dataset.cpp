#include "ddprm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "ddprm/common.hpp"

namespace ddprm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    // trim surrounding blanks
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string()
                                         : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& s, const std::string& origin, long line_no,
              const char* what) {
  int v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw config_error(origin + ":" + std::to_string(line_no) +
                       ": bad integer " + what + " '" + s + "'");
  }
  return v;
}

double parse_double(const std::string& s, const std::string& origin,
                    long line_no, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw config_error(origin + ":" + std::to_string(line_no) +
                       ": bad number " + what + " '" + s + "'");
  }
}

}  // namespace

const CovariateVector& RatingDataset::covariates(int obs_index) const {
  const auto i = static_cast<std::size_t>(obs_index);
  if (i >= obs.size()) throw std::out_of_range("observation index");
  if (design == CovariateDesign::explicit_columns) {
    return covariate_rows[i];
  }
  if (dummy_rows_.empty()) {
    dummy_rows_.assign(static_cast<std::size_t>(num_items),
                       CovariateVector(static_cast<std::size_t>(num_items),
                                       0.0));
    for (int j = 0; j < num_items; ++j) {
      dummy_rows_[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)] =
          1.0;
    }
  }
  return dummy_rows_[static_cast<std::size_t>(obs[i].item)];
}

void RatingDataset::validate() const {
  if (obs.empty()) throw config_error("dataset has no observations");
  if (num_examinees <= 0 || num_items <= 0) {
    throw config_error("dataset dimensions are not positive");
  }
  if (max_category.size() != static_cast<std::size_t>(num_items)) {
    throw config_error("max_category length does not match item count");
  }
  std::vector<char> seen_t(static_cast<std::size_t>(num_examinees), 0);
  std::vector<char> seen_j(static_cast<std::size_t>(num_items), 0);
  for (const Observation& o : obs) {
    if (o.examinee < 0 || o.examinee >= num_examinees) {
      throw config_error("examinee index out of range");
    }
    if (o.item < 0 || o.item >= num_items) {
      throw config_error("item index out of range");
    }
    const int m = max_category[static_cast<std::size_t>(o.item)];
    if (m < 1) throw config_error("item must have at least two categories");
    if (o.rating < 0 || o.rating > m) {
      throw config_error("rating outside 0..m for item " +
                         std::to_string(o.item + 1));
    }
    seen_t[static_cast<std::size_t>(o.examinee)] = 1;
    seen_j[static_cast<std::size_t>(o.item)] = 1;
  }
  if (std::count(seen_t.begin(), seen_t.end(), 1) != num_examinees) {
    throw config_error("examinee labels are not contiguous from 1");
  }
  if (std::count(seen_j.begin(), seen_j.end(), 1) != num_items) {
    throw config_error("item labels are not contiguous from 1");
  }
  if (design == CovariateDesign::explicit_columns) {
    if (covariate_rows.size() != obs.size()) {
      throw config_error("covariate rows do not match observation count");
    }
    for (const CovariateVector& x : covariate_rows) {
      if (static_cast<int>(x.size()) != num_covariates) {
        throw config_error("ragged covariate rows");
      }
    }
  }
}

RatingDataset RatingDataset::from_csv(const std::string& path,
                                      CovariateDesign design) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open data file: " + path);
  return from_stream(in, design, path);
}

RatingDataset RatingDataset::from_stream(std::istream& in,
                                         CovariateDesign design,
                                         const std::string& origin) {
  RatingDataset d;
  d.design = design;
  std::string line;
  long line_no = 0;
  bool saw_header = false;
  int expect_cols = -1;
  int max_examinee = 0;
  int max_item = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (!saw_header) {
      saw_header = true;
      if (f.size() < 3 || f[0] != "examinee" || f[1] != "item" ||
          f[2] != "rating") {
        throw config_error(origin +
                           ": header must start examinee,item,rating");
      }
      expect_cols = static_cast<int>(f.size());
      if (design == CovariateDesign::explicit_columns && expect_cols < 4) {
        throw config_error(origin +
                           ": explicit design needs covariate columns");
      }
      if (design == CovariateDesign::item_dummy && expect_cols != 3) {
        throw config_error(origin +
                           ": dummy design expects exactly 3 columns");
      }
      d.num_covariates =
          design == CovariateDesign::explicit_columns ? expect_cols - 3 : 0;
      continue;
    }
    if (static_cast<int>(f.size()) != expect_cols) {
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": expected " + std::to_string(expect_cols) +
                         " fields, got " + std::to_string(f.size()));
    }
    Observation o;
    o.examinee = parse_int(f[0], origin, line_no, "examinee") - 1;
    o.item = parse_int(f[1], origin, line_no, "item") - 1;
    o.rating = parse_int(f[2], origin, line_no, "rating");
    if (o.examinee < 0 || o.item < 0 || o.rating < 0) {
      throw config_error(origin + ":" + std::to_string(line_no) +
                         ": labels must be positive and ratings nonnegative");
    }
    max_examinee = std::max(max_examinee, o.examinee + 1);
    max_item = std::max(max_item, o.item + 1);
    d.obs.push_back(o);
    if (design == CovariateDesign::explicit_columns) {
      CovariateVector x(static_cast<std::size_t>(d.num_covariates));
      for (int c = 0; c < d.num_covariates; ++c) {
        x[static_cast<std::size_t>(c)] =
            parse_double(f[static_cast<std::size_t>(3 + c)], origin, line_no,
                         "covariate");
      }
      d.covariate_rows.push_back(std::move(x));
    }
  }
  if (!saw_header) throw config_error(origin + ": empty file");
  d.num_examinees = max_examinee;
  d.num_items = max_item;
  if (design == CovariateDesign::item_dummy) d.num_covariates = max_item;
  d.max_category.assign(static_cast<std::size_t>(max_item), 0);
  for (const Observation& o : d.obs) {
    auto& m = d.max_category[static_cast<std::size_t>(o.item)];
    m = std::max(m, o.rating);
  }
  d.validate();
  return d;
}

void RatingDataset::to_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw config_error("cannot write data file: " + path);
  out << "examinee,item,rating";
  if (design == CovariateDesign::explicit_columns) {
    for (int c = 0; c < num_covariates; ++c) out << ",x" << c + 1;
  }
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out << obs[i].examinee + 1 << ',' << obs[i].item + 1 << ','
        << obs[i].rating;
    if (design == CovariateDesign::explicit_columns) {
      for (double v : covariate_rows[i]) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ',' << buf;
      }
    }
    out << "\n";
  }
}

}  // namespace ddprm
