#include "SoiBenchmark.h"

#include "Generators.h"
#include "WitnessCheck.h"
#include "nnv/Engine.h"
#include "nnv/Preprocessor.h"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace nnv::testing {

namespace {

double median( std::vector<double> values )
{
    if ( values.empty() )
        return 0;
    std::sort( values.begin(), values.end() );
    size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * ( values[n / 2 - 1] + values[n / 2] );
}

unsigned unfixedRelus( const Query &q )
{
    PreprocessResult pre = preprocess( q );
    if ( pre.report.infeasible )
        return 0;
    unsigned count = 0;
    for ( const PLConstraint &c : pre.query.constraints )
        count += c.kind == PLKind::Relu && c.phase( pre.query.bounds ).status == PhaseStatus::Unfixed;
    return count;
}

} // namespace

SoiBenchmarkReport runSoiBenchmark( const SoiBenchmarkOptions &options )
{
    SoiBenchmarkReport report;
    Rng rng( options.seed );
    NetworkOptions network;
    network.minInputs = 2;
    network.maxInputs = 4;
    network.maxHiddenLayers = 3;
    network.maxWidth = 8;
    network.maxPL = 20;

    while ( report.rows.size() < options.instances )
    {
        GeneratedNetwork net = randomNetwork( rng, network );
        Query q = net.toQuery();
        addRandomProperty( rng, net, q, false );
        ++report.generated;
        unsigned unfixed = unfixedRelus( q );
        if ( unfixed < options.minUnfixed )
            continue;

        SoiBenchmarkRow row;
        row.instance = static_cast<unsigned>( report.rows.size() );
        row.relus = static_cast<unsigned>( q.constraints.size() );
        row.unfixed = unfixed;
        EngineOptions engine;
        engine.timeoutSeconds = options.timeoutSeconds;
        engine.useSoI = true;
        SolveResult soi = solveQuery( q, engine );
        engine.useSoI = false;
        SolveResult plain = solveQuery( q, engine );
        row.soiStatus = soi.status;
        row.plainStatus = plain.status;
        row.soiSplits = soi.stats.splits;
        row.plainSplits = plain.stats.splits;
        row.soiMs = soi.stats.timeMs;
        row.plainMs = plain.stats.timeMs;
        if ( soi.status == SolveStatus::Sat )
            row.soiWitnessOk = !witnessViolation( q, soi.assignment, tolerance::kFeasibility );
        if ( plain.status == SolveStatus::Sat )
            row.plainWitnessOk = !witnessViolation( q, plain.assignment, tolerance::kFeasibility );
        report.rows.push_back( row );
    }

    std::vector<double> soiSplits, plainSplits, ratios;
    for ( const SoiBenchmarkRow &row : report.rows )
    {
        soiSplits.push_back( static_cast<double>( row.soiSplits ) );
        plainSplits.push_back( static_cast<double>( row.plainSplits ) );
        ratios.push_back( ( row.soiSplits + 1.0 ) / ( row.plainSplits + 1.0 ) );
        bool decided = row.soiStatus != SolveStatus::Timeout && row.plainStatus != SolveStatus::Timeout;
        report.statusMismatches += decided && row.soiStatus != row.plainStatus;
        report.timeouts += !decided;
    }
    report.medianSoiSplits = median( soiSplits );
    report.medianPlainSplits = median( plainSplits );
    report.medianRatio = median( ratios );
    return report;
}

void writeSoiReport( std::ostream &out, const SoiBenchmarkReport &report )
{
    out << "# DeepSoI vs plain search: case splits\n\n";
    out << report.rows.size() << " instances kept of " << report.generated << " generated\n\n";
    out << "| # | relus | unfixed | status | splits soi | splits plain | ms soi | ms plain |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    for ( const SoiBenchmarkRow &row : report.rows )
    {
        out << "| " << row.instance << " | " << row.relus << " | " << row.unfixed << " | " << statusName( row.soiStatus );
        if ( row.plainStatus != row.soiStatus )
            out << " / " << statusName( row.plainStatus );
        out << " | " << row.soiSplits << " | " << row.plainSplits << " | " << row.soiMs << " | " << row.plainMs
            << " |\n";
    }
    out << std::fixed << std::setprecision( 3 ) << "\nmedian splits: soi " << report.medianSoiSplits << ", plain "
        << report.medianPlainSplits << "\nmedian ratio (soi + 1) / (plain + 1): " << report.medianRatio
        << "\nstatus mismatches: " << report.statusMismatches << ", timeouts: " << report.timeouts << "\n";
}

} // namespace nnv::testing
