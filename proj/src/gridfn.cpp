#include "csbp/gridfn.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace csbp {

namespace {

std::vector<std::vector<double>> read_rows(std::istream& is, std::vector<std::string>& header)
{
    std::string line;
    if (!std::getline(is, line))
        throw std::invalid_argument("grid csv: missing header");
    header.clear();
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            header.push_back(cell);
    }
    std::vector<std::vector<double>> rows;
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r")
            continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw std::invalid_argument("grid csv: bad number on line " + std::to_string(lineno));
            }
        }
        if (row.size() != header.size())
            throw std::invalid_argument("grid csv: wrong column count on line " + std::to_string(lineno));
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2)
        throw std::invalid_argument("grid csv: need at least two rows");
    return rows;
}

double uniform_step(const std::vector<std::vector<double>>& rows)
{
    if (std::abs(rows[0][0]) > 1e-12)
        throw std::invalid_argument("grid csv: first time must be 0");
    const double h = rows[1][0] - rows[0][0];
    if (!(h > 0.0))
        throw std::invalid_argument("grid csv: times must increase");
    for (size_t i = 1; i < rows.size(); ++i)
        if (std::abs(rows[i][0] - h * static_cast<double>(i)) > 1e-9 * std::max(1.0, h * static_cast<double>(i)))
            throw std::invalid_argument("grid csv: non-uniform grid at row " + std::to_string(i + 1));
    return h;
}

}  // namespace

void write_csv(std::ostream& os, const GridFunctiond& f)
{
    os << "t,value\n" << std::setprecision(17);
    for (Eigen::Index i = 0; i < f.size(); ++i)
        os << f.time(i) << ',' << f.values[i] << '\n';
}

void write_csv(std::ostream& os, const MatrixGridFunctiond& f)
{
    os << 't';
    for (int i = 0; i < f.rows(); ++i)
        for (int j = 0; j < f.cols(); ++j)
            os << ",e_" << i + 1 << '_' << j + 1;
    os << '\n' << std::setprecision(17);
    for (Eigen::Index k = 0; k < f.size(); ++k) {
        os << f(0, 0).time(k);
        for (int i = 0; i < f.rows(); ++i)
            for (int j = 0; j < f.cols(); ++j)
                os << ',' << f(i, j).values[k];
        os << '\n';
    }
}

GridFunctiond read_grid_csv(std::istream& is)
{
    std::vector<std::string> header;
    const auto rows = read_rows(is, header);
    if (header.size() != 2 || header[0] != "t")
        throw std::invalid_argument("grid csv: expected header t,value");
    const double h = uniform_step(rows);
    Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
    for (size_t i = 0; i < rows.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = rows[i][1];
    return GridFunctiond(h, std::move(v));
}

MatrixGridFunctiond read_matrix_grid_csv(std::istream& is)
{
    std::vector<std::string> header;
    const auto rows = read_rows(is, header);
    if (header.empty() || header[0] != "t")
        throw std::invalid_argument("matrix grid csv: first column must be t");
    const size_t entries = header.size() - 1;
    const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(entries))));
    if (d < 1 || static_cast<size_t>(d * d) != entries)
        throw std::invalid_argument("matrix grid csv: column count is not a square");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const std::string want = "e_" + std::to_string(i + 1) + "_" + std::to_string(j + 1);
            if (header[static_cast<size_t>(1 + i * d + j)] != want)
                throw std::invalid_argument("matrix grid csv: expected column " + want);
        }
    const double h = uniform_step(rows);
    std::vector<GridFunctiond> e;
    for (size_t c = 1; c <= entries; ++c) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(rows.size()));
        for (size_t i = 0; i < rows.size(); ++i)
            v[static_cast<Eigen::Index>(i)] = rows[i][c];
        e.emplace_back(h, std::move(v));
    }
    return MatrixGridFunctiond(d, d, std::move(e));
}

MatrixGridFunctiond read_matrix_grid_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open " + path);
    return read_matrix_grid_csv(in);
}

}  // namespace csbp
