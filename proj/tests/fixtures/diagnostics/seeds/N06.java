public class N extends Baz { }
