// Command-line front end: builds a query from a network and property or from a
// native query file, solves it and prints the result format on stdout.

#include "nnv/Engine.h"
#include "nnv/Error.h"
#include "nnv/NNet.h"
#include "nnv/Parallel.h"
#include "nnv/Proof.h"
#include "nnv/QueryFile.h"
#include "nnv/Vnnlib.h"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace nnv;

namespace {

enum class Mode { Auto, Snc, Portfolio };

struct RunConfig
{
    std::string networkPath;
    std::string queryPath;
    std::string propertyPath;
    double timeout = 0;
    unsigned workers = 1;
    Mode mode = Mode::Auto;
    uint64_t seed = 1;
    bool prove = false;
    bool checkProof = false;
    std::string exportProofPath;
    std::string analyses = "ibp,deeppoly";
    std::string dumpQueryPath;
    bool nnetNormalize = false;
    int verbosity = 0;
};

int exitCode( SolveStatus status )
{
    switch ( status )
    {
    case SolveStatus::Sat:
        return 10;
    case SolveStatus::Unsat:
        return 20;
    case SolveStatus::Timeout:
        return 30;
    case SolveStatus::Unknown:
        return 40;
    }
    return 2;
}

Query buildQuery( const RunConfig &config )
{
    if ( !config.queryPath.empty() )
    {
        if ( !config.propertyPath.empty() )
            throw UsageError( "--prop applies to --network only" );
        return readQueryFile( config.queryPath );
    }
    NNetModel model = readNNetFile( config.networkPath );
    Query query = networkToQuery( model, config.nnetNormalize );
    if ( !config.propertyPath.empty() )
    {
        std::string text = readTextFile( config.propertyPath );
        applyProperty( query, parseVnnlib( text, model.numInputs(), model.numOutputs() ) );
    }
    return query;
}

void writeFile( const std::string &path, const std::string &text )
{
    std::ofstream out( path );
    if ( !out || !( out << text ) )
        throw UsageError( "cannot write " + path );
}

SolveResult solve( const RunConfig &config, const Query &query )
{
    EngineOptions options;
    options.timeoutSeconds = config.timeout;
    options.seed = config.seed;
    options.produceProof = config.prove;
    options.analyses = nlr::parseAnalyses( config.analyses );

    if ( config.mode == Mode::Portfolio )
        return runPortfolio( query, options, config.workers );
    if ( config.mode == Mode::Auto && config.workers <= 1 )
        return solveQuery( query, options );
    SncOptions snc;
    snc.workers = config.workers;
    return runSnc( query, options, snc );
}

// Returns the line to print after the result, downgrading the status when the
// proof does not check.
std::string handleProof( const RunConfig &config, const Query &query, SolveResult &result )
{
    if ( result.status != SolveStatus::Unsat || !result.proof )
        return {};
    if ( !config.exportProofPath.empty() )
        writeFile( config.exportProofPath, writeProof( *result.proof ) );
    if ( !config.checkProof )
        return {};

    ProofNode reread = config.exportProofPath.empty() ? parseProof( writeProof( *result.proof ) )
                                                      : parseProof( readTextFile( config.exportProofPath ) );
    CheckOutcome outcome = checkProofTree( normalize( query ), reread );
    if ( outcome.certified )
        return "proof: certified";
    result.status = SolveStatus::Unknown;
    return "proof: rejected at " + outcome.path + ": " + outcome.reason;
}

int run( const RunConfig &config )
{
    if ( config.networkPath.empty() == config.queryPath.empty() )
        throw UsageError( "give exactly one of --network and --query" );
    if ( config.prove && config.workers > 1 )
        throw UsageError( "--prove runs with a single worker" );

    Query query = buildQuery( config );
    if ( !config.dumpQueryPath.empty() )
        writeFile( config.dumpQueryPath, writeQuery( query ) );

    SolveResult result = solve( config, query );
    std::string proofLine = handleProof( config, query, result );

    std::ostringstream out;
    writeResult( out, result.status, result.assignment );
    if ( !proofLine.empty() )
        out << proofLine << '\n';
    std::cout << out.str() << std::flush;

    if ( config.verbosity >= 1 )
    {
        const SolveStats &s = result.stats;
        std::cerr << "stats: splits=" << s.splits << " pivots=" << s.pivots << " time_ms=" << s.timeMs << '\n';
        if ( config.verbosity >= 2 )
        {
            std::cerr << "lp_solves=" << s.lpSolves << " tightenings=" << s.tightenings
                      << " soi_proposals=" << s.soiProposals << '\n';
            if ( s.subqueriesCreated > 0 )
                std::cerr << "subqueries: created=" << s.subqueriesCreated << " solved=" << s.subqueriesSolved
                          << " redivided=" << s.subqueriesRedivided << " cancelled=" << s.subqueriesCancelled
                          << '\n';
        }
        if ( !result.message.empty() )
            std::cerr << result.message << '\n';
    }
    return exitCode( result.status );
}

} // namespace

int main( int argc, char **argv )
{
    RunConfig config;
    CLI::App app{ "Piecewise-linear neural network verifier" };
    app.allow_windows_style_options( false );
    app.add_option( "--network", config.networkPath, "Network in NNet format" );
    app.add_option( "--query", config.queryPath, "Query in the native format" );
    app.add_option( "--prop", config.propertyPath, "VNN-LIB property for --network" );
    app.add_option( "--timeout", config.timeout, "Wall-clock limit in seconds (0: none)" )->check( CLI::NonNegativeNumber );
    app.add_option( "--workers", config.workers, "Parallel workers" )->check( CLI::PositiveNumber );
    std::string mode = "auto";
    app.add_option( "--mode", mode, "Parallel mode: auto, snc or portfolio" )
        ->check( CLI::IsMember( { "auto", "snc", "portfolio" } ) );
    app.add_option( "--seed", config.seed, "Random seed" );
    app.add_flag( "--prove", config.prove, "Produce an Unsat proof tree" );
    app.add_option( "--export-proof", config.exportProofPath, "Write the proof tree to this file" );
    app.add_flag( "--check-proof", config.checkProof, "Re-read and check the proof (implies --prove)" );
    app.add_option( "--analyses", config.analyses, "Comma-separated subset of ibp,sbt,deeppoly,lp" );
    app.add_option( "--dump-query", config.dumpQueryPath, "Write the query to this file before solving" );
    app.add_flag( "--nnet-normalize", config.nnetNormalize, "Apply the NNet input/output normalization" );
    app.add_option( "--verbosity", config.verbosity, "0: result only, 1: stats, 2: detailed stats" );

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        int code = app.exit( e );
        return code == 0 ? 0 : 1;
    }
    config.mode = mode == "snc" ? Mode::Snc : mode == "portfolio" ? Mode::Portfolio : Mode::Auto;
    if ( config.checkProof || !config.exportProofPath.empty() )
        config.prove = true;

    try
    {
        return run( config );
    }
    catch ( const NumericalError &e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch ( const Error &e )
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    catch ( const std::exception &e )
    {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
