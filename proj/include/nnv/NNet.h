#pragma once

#include "nnv/Query.h"

#include <iosfwd>
#include <string>
#include <vector>

namespace nnv {

// Fully connected ReLU network in NNet layout. weights[L] has one row per
// neuron of layer L+1; every hidden layer is ReLU and the output layer is affine.
struct NNetModel
{
    std::vector<unsigned> layerSizes;
    std::vector<std::vector<std::vector<double>>> weights;
    std::vector<std::vector<double>> biases;

    // Normalization metadata. means/ranges carry one extra trailing entry for the outputs.
    std::vector<double> inputMins;
    std::vector<double> inputMaxes;
    std::vector<double> means;
    std::vector<double> ranges;

    unsigned numInputs() const
    {
        return layerSizes.front();
    }
    unsigned numOutputs() const
    {
        return layerSizes.back();
    }
    unsigned numLayers() const
    {
        return static_cast<unsigned>( weights.size() );
    }
};

// Throws ParseError with the offending line number.
NNetModel parseNNet( std::istream &in );
NNetModel parseNNet( const std::string &text );
NNetModel readNNetFile( const std::string &path );

// Forward pass. With `normalize`, inputs are mapped through (x - mean) / range
// and outputs through y * range + mean, as the metadata prescribes.
std::vector<double> evaluate( const NNetModel &model, const std::vector<double> &input, bool normalize = false );

// Variables: inputs, then pre- and post-activation per hidden layer, then outputs
// (in + 2 * hidden + out in total). Each affine neuron contributes one equation
// pre - sum w * src = bias; each hidden neuron one ReLU. Inputs are unbounded.
Query networkToQuery( const NNetModel &model, bool normalize = false );

std::string readTextFile( const std::string &path );

} // namespace nnv
