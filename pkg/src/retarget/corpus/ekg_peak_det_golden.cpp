void Algorithm::EKGpeakDet ( mat &sig, int fs, mat &iHR , vec &peak, mat &tHR)
{
    vec RR ;
    uword L ;
    int delay = 0;
    mat qrs_amp_raw;
    vec qrs_i_raw;
    L = m2cpp::length(sig) ;
    pan_tompkin(sig, fs, qrs_amp_raw, peak, delay);
    if (m2cpp::length(peak)>1)
    {
        RR = diff(peak) ;
    }
    else
    {
        RR = 200 ;
    }
    iHR = 60.0*1.0/RR*fs ;
    tHR = (peak(m2cpp::span<uvec>(0, peak.n_rows-2))+RR/2.0)/fs ;
}
