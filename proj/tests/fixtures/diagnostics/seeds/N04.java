import org.foo.*; public class N { Bar b; }
