#include "nnv/NNet.h"

#include "nnv/Error.h"
#include "nnv/Format.h"

#include <fstream>
#include <sstream>

namespace nnv {

namespace {

// Reads comma-separated numeric lines, skipping "//" comments and blank lines.
class NNetReader
{
public:
    explicit NNetReader( std::istream &in )
        : _in( in )
    {
    }

    std::vector<double> numbers( const std::string &what )
    {
        std::string line;
        while ( std::getline( _in, line ) )
        {
            ++_line;
            size_t start = line.find_first_not_of( " \t\r" );
            if ( start == std::string::npos || line.compare( start, 2, "//" ) == 0 )
                continue;
            std::vector<double> values;
            std::string_view rest( line );
            while ( !rest.empty() )
            {
                size_t comma = rest.find( ',' );
                std::string_view token = rest.substr( 0, comma );
                rest = comma == std::string_view::npos ? std::string_view() : rest.substr( comma + 1 );
                while ( !token.empty() && std::isspace( static_cast<unsigned char>( token.front() ) ) )
                    token.remove_prefix( 1 );
                while ( !token.empty() && std::isspace( static_cast<unsigned char>( token.back() ) ) )
                    token.remove_suffix( 1 );
                if ( token.empty() )
                    continue;
                auto value = parseDouble( token );
                if ( !value )
                    throw ParseError( "non-numeric token '" + std::string( token ) + "' in " + what, _line );
                values.push_back( *value );
            }
            return values;
        }
        throw ParseError( "unexpected end of file while reading " + what, _line );
    }

    std::vector<double> exactly( size_t count, const std::string &what )
    {
        std::vector<double> values = numbers( what );
        if ( values.size() != count )
            throw ParseError( what + " has " + std::to_string( values.size() ) + " entries, expected " +
                                  std::to_string( count ),
                              _line );
        return values;
    }

    // Skips one non-comment line without interpreting it.
    void skip()
    {
        std::string line;
        while ( std::getline( _in, line ) )
        {
            ++_line;
            size_t start = line.find_first_not_of( " \t\r" );
            if ( start != std::string::npos && line.compare( start, 2, "//" ) != 0 )
                return;
        }
    }

    unsigned line() const
    {
        return _line;
    }

private:
    std::istream &_in;
    unsigned _line = 0;
};

unsigned asCount( double value, const std::string &what, unsigned line )
{
    if ( value < 1 || value != static_cast<unsigned>( value ) )
        throw ParseError( what + " must be a positive integer", line );
    return static_cast<unsigned>( value );
}

} // namespace

NNetModel parseNNet( std::istream &in )
{
    NNetReader reader( in );
    NNetModel model;

    std::vector<double> header = reader.exactly( 4, "header" );
    unsigned numLayers = asCount( header[0], "layer count", reader.line() );
    unsigned inputSize = asCount( header[1], "input size", reader.line() );
    unsigned outputSize = asCount( header[2], "output size", reader.line() );

    for ( double size : reader.exactly( numLayers + 1, "layer sizes" ) )
        model.layerSizes.push_back( asCount( size, "layer size", reader.line() ) );
    if ( model.layerSizes.front() != inputSize || model.layerSizes.back() != outputSize )
        throw ParseError( "layer sizes disagree with the header", reader.line() );

    reader.skip();
    model.inputMins = reader.exactly( inputSize, "input minimums" );
    model.inputMaxes = reader.exactly( inputSize, "input maximums" );
    model.means = reader.exactly( inputSize + 1, "means" );
    model.ranges = reader.exactly( inputSize + 1, "ranges" );

    for ( unsigned layer = 0; layer < numLayers; ++layer )
    {
        unsigned rows = model.layerSizes[layer + 1];
        unsigned columns = model.layerSizes[layer];
        std::string name = "layer " + std::to_string( layer );
        std::vector<std::vector<double>> matrix;
        for ( unsigned r = 0; r < rows; ++r )
            matrix.push_back( reader.exactly( columns, name + " weight row " + std::to_string( r ) ) );
        std::vector<double> bias;
        for ( unsigned r = 0; r < rows; ++r )
            bias.push_back( reader.exactly( 1, name + " bias " + std::to_string( r ) )[0] );
        model.weights.push_back( std::move( matrix ) );
        model.biases.push_back( std::move( bias ) );
    }
    return model;
}

NNetModel parseNNet( const std::string &text )
{
    std::istringstream in( text );
    return parseNNet( in );
}

std::string readTextFile( const std::string &path )
{
    std::ifstream in( path );
    if ( !in )
        throw Error( "cannot open " + path );
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

NNetModel readNNetFile( const std::string &path )
{
    std::ifstream in( path );
    if ( !in )
        throw Error( "cannot open " + path );
    return parseNNet( in );
}

namespace {

void checkRanges( const NNetModel &model )
{
    for ( double range : model.ranges )
        if ( range == 0 )
            throw UsageError( "cannot normalize: the network has a zero range" );
}

} // namespace

std::vector<double> evaluate( const NNetModel &model, const std::vector<double> &input, bool normalize )
{
    if ( input.size() != model.numInputs() )
        throw UsageError( "input has " + std::to_string( input.size() ) + " values, network expects " +
                          std::to_string( model.numInputs() ) );
    if ( normalize )
        checkRanges( model );

    std::vector<double> current = input;
    if ( normalize )
        for ( unsigned i = 0; i < current.size(); ++i )
            current[i] = ( current[i] - model.means[i] ) / model.ranges[i];

    for ( unsigned layer = 0; layer < model.numLayers(); ++layer )
    {
        bool hidden = layer + 1 < model.numLayers();
        std::vector<double> next( model.layerSizes[layer + 1] );
        for ( unsigned r = 0; r < next.size(); ++r )
        {
            double sum = model.biases[layer][r];
            for ( unsigned c = 0; c < current.size(); ++c )
                sum += model.weights[layer][r][c] * current[c];
            next[r] = hidden && sum < 0 ? 0 : sum;
        }
        current = std::move( next );
    }

    if ( normalize )
        for ( double &value : current )
            value = value * model.ranges.back() + model.means.back();
    return current;
}

Query networkToQuery( const NNetModel &model, bool normalize )
{
    if ( normalize )
        checkRanges( model );

    Query query;
    std::vector<VariableId> previous;
    for ( unsigned i = 0; i < model.numInputs(); ++i )
        previous.push_back( query.addVariable() );
    query.inputVariables = previous;

    unsigned inputs = model.numInputs();
    for ( unsigned layer = 0; layer < model.numLayers(); ++layer )
    {
        bool hidden = layer + 1 < model.numLayers();
        // Output denormalization scales the whole last affine layer.
        double outScale = normalize && !hidden ? model.ranges.back() : 1.0;
        double outShift = normalize && !hidden ? model.means.back() : 0.0;

        std::vector<VariableId> pre;
        for ( unsigned r = 0; r < model.layerSizes[layer + 1]; ++r )
        {
            VariableId v = query.addVariable();
            pre.push_back( v );
            Equation e;
            e.addTerm( v, 1 );
            double rhs = model.biases[layer][r];
            for ( unsigned c = 0; c < previous.size(); ++c )
            {
                double w = model.weights[layer][r][c];
                if ( normalize && layer == 0 && c < inputs )
                {
                    rhs -= w * model.means[c] / model.ranges[c];
                    w /= model.ranges[c];
                }
                e.addTerm( previous[c], -outScale * w );
            }
            e.rhs = outScale * rhs + outShift;
            query.addEquation( std::move( e ) );
        }

        if ( !hidden )
        {
            query.outputVariables = pre;
            break;
        }
        std::vector<VariableId> post;
        for ( VariableId b : pre )
        {
            VariableId f = query.addVariable();
            post.push_back( f );
            query.addConstraint( PLConstraint::relu( f, b ) );
        }
        previous = std::move( post );
    }
    return query;
}

} // namespace nnv
